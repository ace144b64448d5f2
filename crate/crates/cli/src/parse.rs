//! Literal parsers for command-line values.

use crate::Failure;
use num_complex::Complex64;
use rug::Rational;
use semidyn_core::arith::{normalize, parse_rational, Place, ProjPoint, Space};
use semidyn_core::measures::{SequenceSpec, SpherePoint};

/// Projective literals go through [`ProjPoint`]'s parser. Affine tuples
/// "(a,b,...)" become (a:1) per factor on a product of lines, or
/// (a:b:...:1) on a single ℙᴺ.
pub fn point(literal: &str, space: &Space) -> Result<ProjPoint, Failure> {
    let bad = |why: String| Failure::input(format!("--point {literal:?}: {why}"));
    let p = if literal.contains(':') {
        literal.parse::<ProjPoint>().map_err(|e| bad(e.to_string()))?
    } else {
        let t: String = literal.chars().filter(|c| !c.is_whitespace()).collect();
        let inner = t.strip_prefix('(').and_then(|s| s.strip_suffix(')')).unwrap_or(&t);
        let coords = inner.split(',').map(parse_rational).collect::<Result<Vec<_>, _>>().map_err(|e| bad(e.to_string()))?;
        let dims = space.dims();
        let raw: Vec<Vec<Rational>> = if dims.iter().all(|&n| n == 1) && dims.len() == coords.len() {
            coords.into_iter().map(|c| vec![c, Rational::from(1)]).collect()
        } else if dims.len() == 1 && dims[0] == coords.len() {
            let mut c = coords;
            c.push(Rational::from(1));
            vec![c]
        } else {
            return Err(bad(format!("affine form does not fit the space {dims:?}")));
        };
        normalize(&raw).map_err(|e| bad(e.to_string()))?
    };
    p.in_space(space).map_err(|e| bad(e.to_string()))?;
    Ok(p)
}

pub fn place(s: &str) -> Result<Place, Failure> {
    if s.eq_ignore_ascii_case("inf") || s == "∞" {
        return Ok(Place::Archimedean);
    }
    let p: rug::Integer = s.parse().map_err(|_| Failure::input(format!("--place {s:?}: expected \"inf\" or a prime")))?;
    Place::prime(p).map_err(|e| Failure::input(format!("--place: {e}")))
}

/// "inf", "x" or "x,y" (real and imaginary parts).
pub fn sphere_point(s: &str) -> Result<SpherePoint, Failure> {
    let s = s.trim();
    if s.eq_ignore_ascii_case("inf") || s == "∞" {
        return Ok(SpherePoint::infinity());
    }
    let parts: Vec<&str> = s.split(',').collect();
    let num = |t: &str| t.trim().parse::<f64>().map_err(|_| Failure::input(format!("bad complex literal {s:?}")));
    let z = match parts[..] {
        [re] => Complex64::new(num(re)?, 0.0),
        [re, im] => Complex64::new(num(re)?, num(im)?),
        _ => return Err(Failure::input(format!("bad complex literal {s:?}"))),
    };
    if !z.is_finite() {
        return Err(Failure::input(format!("bad complex literal {s:?}")));
    }
    Ok(SpherePoint::affine(z))
}

pub fn sphere_points(s: &str) -> Result<Vec<SpherePoint>, Failure> {
    s.split(';').filter(|t| !t.trim().is_empty()).map(sphere_point).collect()
}

pub fn depths(s: &str) -> Result<Vec<usize>, Failure> {
    s.split(',')
        .map(|t| t.trim().parse().map_err(|_| Failure::input(format!("--depths {s:?}: expected integers"))))
        .collect()
}

pub fn sequence(s: &str) -> Result<SequenceSpec, Failure> {
    let bad = || Failure::input(format!("--sequence {s:?}: expected constant[:c], harmonic, alternating or values:v0,v1,...;limit"));
    let (head, tail) = s.split_once(':').unwrap_or((s, ""));
    match head {
        "constant" if tail.is_empty() => Ok(SequenceSpec::Constant(1.0)),
        "constant" => tail.parse().map(SequenceSpec::Constant).map_err(|_| bad()),
        "harmonic" => Ok(SequenceSpec::Harmonic),
        "alternating" => Ok(SequenceSpec::AlternatingGeometric),
        "values" => {
            let (vals, limit) = tail.split_once(';').ok_or_else(bad)?;
            let values = vals.split(',').map(|v| v.trim().parse::<f64>()).collect::<Result<Vec<_>, _>>().map_err(|_| bad())?;
            let limit = limit.trim().parse().map_err(|_| bad())?;
            Ok(SequenceSpec::Explicit { values, limit })
        }
        _ => Err(bad()),
    }
}
