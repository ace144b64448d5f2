use super::{factor_height, ArithError};
use rug::{Integer, Rational};
use serde::{Deserialize, Serialize};
use std::fmt;

/// Descriptor of ℙ^{N_1} × ⋯ × ℙ^{N_m}.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Space(pub Vec<usize>);

impl Space {
    pub fn projective(n: usize) -> Self {
        Space(vec![n])
    }

    pub fn dims(&self) -> &[usize] {
        &self.0
    }
}

/// A rational point of a product of projective spaces in canonical form:
/// per factor, coprime integers with first nonzero coordinate positive.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ProjPoint {
    factors: Vec<Vec<Integer>>,
}

impl ProjPoint {
    /// Canonicalizes integer coordinates (divide by gcd, fix sign).
    pub fn from_integers(mut factors: Vec<Vec<Integer>>) -> Result<Self, ArithError> {
        for (i, f) in factors.iter_mut().enumerate() {
            canonicalize_factor(f).ok_or(ArithError::DegeneratePoint { factor: i })?;
        }
        Ok(ProjPoint { factors })
    }

    pub fn from_i64(factors: &[&[i64]]) -> Result<Self, ArithError> {
        Self::from_integers(
            factors
                .iter()
                .map(|f| f.iter().map(|&c| Integer::from(c)).collect())
                .collect(),
        )
    }

    /// Point of ℙ¹ representing the affine value `t` as `(t : 1)`.
    pub fn affine_line(t: &Rational) -> Self {
        let coords = vec![t.numer().clone(), t.denom().clone()];
        Self::from_integers(vec![coords]).expect("denominator is nonzero")
    }

    pub fn factors(&self) -> &[Vec<Integer>] {
        &self.factors
    }

    pub fn factor(&self, i: usize) -> &[Integer] {
        &self.factors[i]
    }

    pub fn into_factors(self) -> Vec<Vec<Integer>> {
        self.factors
    }

    pub fn space(&self) -> Space {
        Space(self.factors.iter().map(|f| f.len() - 1).collect())
    }

    pub fn in_space(&self, space: &Space) -> Result<(), ArithError> {
        let mine = self.space();
        if &mine != space {
            return Err(ArithError::SpaceMismatch { expected: space.0.clone(), got: mine.0 });
        }
        Ok(())
    }

    /// Affine value of factor `i` of a ℙ¹ factor, `None` at infinity.
    pub fn affine_coordinate(&self, i: usize) -> Option<Rational> {
        let f = &self.factors[i];
        if f[1].is_zero() {
            None
        } else {
            Some(Rational::from((f[0].clone(), f[1].clone())))
        }
    }

    /// Total bit length of all coordinates.
    pub fn bit_size(&self) -> u64 {
        self.factors
            .iter()
            .flatten()
            .map(|c| u64::from(c.significant_bits()))
            .sum()
    }

    /// Largest bit length of a single coordinate.
    pub fn max_coordinate_bits(&self) -> u32 {
        self.factors.iter().flatten().map(|c| c.significant_bits()).max().unwrap_or(0)
    }
}

/// Divides by the gcd and makes the first nonzero entry positive.
/// Returns `None` for the zero vector.
pub(crate) fn canonicalize_factor(f: &mut [Integer]) -> Option<()> {
    let mut g = Integer::new();
    for c in f.iter() {
        g.gcd_mut(c);
    }
    if g.is_zero() {
        return None;
    }
    let first_negative = f.iter().find(|c| !c.is_zero()).map(|c| *c < 0).unwrap_or(false);
    if first_negative {
        g = -g;
    }
    if g != 1 {
        for c in f.iter_mut() {
            c.div_exact_mut(&g);
        }
    }
    Some(())
}

/// The canonical representative of a point given by rational coordinates.
pub fn normalize(raw: &[Vec<Rational>]) -> Result<ProjPoint, ArithError> {
    let factors = raw
        .iter()
        .enumerate()
        .map(|(i, coords)| {
            if coords.iter().all(|c| c.is_zero()) {
                return Err(ArithError::DegeneratePoint { factor: i });
            }
            let mut lcm = Integer::from(1);
            for c in coords {
                lcm.lcm_mut(c.denom());
            }
            Ok(coords
                .iter()
                .map(|c| Integer::from(c.numer() * Integer::from(&lcm / c.denom())))
                .collect())
        })
        .collect::<Result<Vec<_>, _>>()?;
    ProjPoint::from_integers(factors)
}

/// h_nv(x) = Σ_factors ln max_i |x_i| for a normalized point.
pub fn naive_height(x: &ProjPoint) -> f64 {
    x.factors.iter().map(|f| factor_height(f)).sum()
}

/// Parses `p`, `-p` or `p/q`.
pub fn parse_rational(s: &str) -> Result<Rational, ArithError> {
    let s = s.trim();
    let bad = || ArithError::BadLiteral(s.to_string());
    match s.split_once('/') {
        Some((n, d)) => {
            let n: Integer = n.trim().parse().map_err(|_| bad())?;
            let d: Integer = d.trim().parse().map_err(|_| bad())?;
            if d.is_zero() {
                return Err(bad());
            }
            Ok(Rational::from((n, d)))
        }
        None => s.parse::<Integer>().map(Rational::from).map_err(|_| bad()),
    }
}

impl std::str::FromStr for ProjPoint {
    type Err = ArithError;

    /// Accepts `(a:b)`, `((a:b),(c:d:e))` and rational entries like `2/3`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        let bad = || ArithError::BadLiteral(s.to_string());
        let inner = if t.starts_with("((") && t.ends_with("))") {
            &t[1..t.len() - 1]
        } else {
            t.as_str()
        };
        let mut raw = Vec::new();
        for part in inner.split("),") {
            let p = part.trim_start_matches('(').trim_end_matches(')');
            if p.is_empty() {
                return Err(bad());
            }
            let coords = p.split(':').map(parse_rational).collect::<Result<Vec<_>, _>>()?;
            if coords.len() < 2 {
                return Err(bad());
            }
            raw.push(coords);
        }
        normalize(&raw)
    }
}

impl fmt::Display for ProjPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .factors
            .iter()
            .map(|c| {
                let s: Vec<String> = c.iter().map(|x| x.to_string()).collect();
                format!("({})", s.join(":"))
            })
            .collect();
        if parts.len() == 1 {
            write!(f, "{}", parts[0])
        } else {
            write!(f, "({})", parts.join(","))
        }
    }
}

impl fmt::Debug for ProjPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.bit_size() > 512 {
            write!(f, "ProjPoint<{:?}, {} bits>", self.space().0, self.bit_size())
        } else {
            write!(f, "{self}")
        }
    }
}

impl Serialize for ProjPoint {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let v: Vec<Vec<String>> =
            self.factors.iter().map(|f| f.iter().map(|c| c.to_string()).collect()).collect();
        v.serialize(s)
    }
}

impl<'de> Deserialize<'de> for ProjPoint {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let v: Vec<Vec<String>> = Vec::deserialize(d)?;
        let factors = v
            .iter()
            .map(|f| f.iter().map(|c| c.parse::<Integer>()).collect::<Result<Vec<_>, _>>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(serde::de::Error::custom)?;
        ProjPoint::from_integers(factors).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn q(n: i64, d: i64) -> Rational {
        Rational::from((n, d))
    }

    #[test]
    fn normalize_examples() {
        let p = normalize(&[vec![q(2, 3), q(4, 3)]]).unwrap();
        assert_eq!(p, ProjPoint::from_i64(&[&[1, 2]]).unwrap());
        let p = normalize(&[vec![q(0, 1), q(-5, 1)]]).unwrap();
        assert_eq!(p.factor(0), &[Integer::from(0), Integer::from(1)]);
        let p = normalize(&[vec![q(6, 1), q(10, 1), q(15, 1)]]).unwrap();
        assert_eq!(p.to_string(), "(6:10:15)");
    }

    #[test]
    fn zero_factor_is_degenerate() {
        let err = normalize(&[vec![q(1, 1), q(1, 1)], vec![q(0, 1), q(0, 1)]]).unwrap_err();
        assert_eq!(err, ArithError::DegeneratePoint { factor: 1 });
    }

    #[test]
    fn naive_height_examples() {
        let h = |s: &str| naive_height(&s.parse().unwrap());
        assert_eq!(h("(1:1)"), 0.0);
        assert!((h("(2:3)") - 3f64.ln()).abs() < 1e-15);
        assert!((h("((2:3),(1:5))") - (3f64.ln() + 5f64.ln())).abs() < 1e-15);
        assert_eq!(h("(1:-1:0)"), 0.0);
    }

    #[test]
    fn literal_round_trip() {
        let p: ProjPoint = "((2/3:4),(1:-5:7))".parse().unwrap();
        assert_eq!(p.to_string(), "((1:6),(1:-5:7))");
        assert_eq!(p.to_string().parse::<ProjPoint>().unwrap(), p);
        assert!("(1)".parse::<ProjPoint>().is_err());
        assert!("(a:b)".parse::<ProjPoint>().is_err());
    }

    fn rat() -> impl Strategy<Value = Rational> {
        (-1000i64..1000, 1i64..1000).prop_map(|(n, d)| q(n, d))
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]
        #[test]
        fn normalize_is_idempotent_and_scale_invariant(
            coords in prop::collection::vec(rat(), 2..5),
            c in rat().prop_filter("nonzero", |c| !c.is_zero()),
        ) {
            prop_assume!(coords.iter().any(|x| !x.is_zero()));
            let p = normalize(&[coords.clone()]).unwrap();
            let again: Vec<Rational> = p.factor(0).iter().map(|x| Rational::from(x.clone())).collect();
            prop_assert_eq!(&normalize(&[again]).unwrap(), &p);
            let scaled: Vec<Rational> = coords.iter().map(|x| Rational::from(x * &c)).collect();
            let ps = normalize(&[scaled]).unwrap();
            prop_assert_eq!(naive_height(&ps), naive_height(&p));
            prop_assert_eq!(ps, p);
        }
    }
}
