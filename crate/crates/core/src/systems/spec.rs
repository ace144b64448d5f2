//! JSON description files for systems.
//!
//! ```json
//! {"type": "poly_pn", "dimension": 1,
//!  "maps": [[[{"exponents": [2, 0], "coeff": "1"}], [{"exponents": [0, 2], "coeff": "1"}]]]}
//! {"type": "lattes", "a": "0", "b": "1"}
//! {"type": "k3_222", "terms": [{"exponents": [1, 0, 0], "coeff": "1"}, ...]}
//! {"type": "k3_wheeler", "f11": [{"x": [1, 0, 0], "y": [0, 1, 0], "coeff": "1"}, ...],
//!  "f22": [...], "points": ["((1:0:0),(0:1:0))"]}
//! {"type": "k3_12_21", "f12": [...], "f21": [...], "points": []}
//! {"type": "henon", "a": "1", "b": "0"}
//! ```
//!
//! Integers are decimal strings; Hénon parameters are rational strings.
//! Optional `weights` and `degree` override the height functional and d
//! (the file then asserts Σ f_i^* L ≅ d L for that L).

use super::{
    lattes_duplication, DoubleCoverVariant, Dynamics, HenonSystem, K3DoubleCoverSystem, K3TrilinearSystem,
    PolyMap, PolyMapSystem, SystemError, WordSystem,
};
use crate::arith::{parse_rational, ProjPoint};
use crate::poly::{Poly, TermSpec};
use rug::Integer;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiTermSpec {
    pub x: [u32; 3],
    pub y: [u32; 3],
    pub coeff: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum SystemKindSpec {
    PolyPn {
        dimension: usize,
        /// maps[i][j] is the j-th coordinate form of f_i.
        maps: Vec<Vec<Vec<TermSpec>>>,
    },
    Lattes {
        a: String,
        b: String,
    },
    #[serde(rename = "k3_222")]
    K3222 {
        terms: Vec<TermSpec>,
    },
    K3Wheeler {
        f11: Vec<BiTermSpec>,
        f22: Vec<BiTermSpec>,
        #[serde(default)]
        points: Vec<String>,
    },
    #[serde(rename = "k3_12_21")]
    K31221 {
        f12: Vec<BiTermSpec>,
        f21: Vec<BiTermSpec>,
        #[serde(default)]
        points: Vec<String>,
    },
    Henon {
        a: String,
        b: String,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemSpec {
    #[serde(flatten)]
    pub kind: SystemKindSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub degree: Option<f64>,
}

/// A parsed system: the concrete model plus a shared dynamics handle.
#[derive(Clone)]
pub struct System {
    concrete: Concrete,
    overrides: (Option<Vec<f64>>, Option<f64>),
    dynamics: Arc<dyn Dynamics>,
}

#[derive(Clone)]
enum Concrete {
    Poly(Arc<PolyMapSystem>, Option<(Integer, Integer)>),
    Trilinear(Arc<K3TrilinearSystem>),
    DoubleCover(Arc<K3DoubleCoverSystem>),
    Henon(Arc<HenonSystem>),
}

impl std::fmt::Debug for System {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "System({})", self.dynamics.label())
    }
}

fn parse_int(field: &str, s: &str) -> Result<Integer, SystemError> {
    s.trim()
        .parse()
        .map_err(|_| SystemError::Invalid(format!("field `{field}`: bad integer {s:?}")))
}

fn bi_poly(field: &str, terms: &[BiTermSpec]) -> Result<Poly, SystemError> {
    let mut out = Vec::new();
    for t in terms {
        let e: Vec<u32> = t.x.iter().chain(&t.y).copied().collect();
        out.push((e, parse_int(field, &t.coeff)?));
    }
    Ok(Poly::from_terms(6, out))
}

fn bi_spec(p: &Poly) -> Vec<BiTermSpec> {
    p.terms()
        .iter()
        .map(|(e, c)| BiTermSpec { x: [e[0], e[1], e[2]], y: [e[3], e[4], e[5]], coeff: c.to_string() })
        .collect()
}

fn parse_points(points: &[String]) -> Result<Vec<ProjPoint>, SystemError> {
    points
        .iter()
        .map(|s| s.parse::<ProjPoint>().map_err(SystemError::from))
        .collect()
}

impl System {
    pub fn from_spec(spec: &SystemSpec) -> Result<Self, SystemError> {
        let concrete = match &spec.kind {
            SystemKindSpec::PolyPn { dimension, maps } => {
                let mut out = Vec::new();
                for (i, forms) in maps.iter().enumerate() {
                    if forms.len() != dimension + 1 {
                        return Err(SystemError::Invalid(format!(
                            "field `maps[{i}]`: expected {} forms, got {}",
                            dimension + 1,
                            forms.len()
                        )));
                    }
                    let polys = forms
                        .iter()
                        .enumerate()
                        .map(|(j, f)| {
                            Poly::from_spec(dimension + 1, f)
                                .map_err(|e| SystemError::Invalid(format!("field `maps[{i}][{j}]`: {e}")))
                        })
                        .collect::<Result<Vec<_>, _>>()?;
                    out.push(PolyMap::new(polys).map_err(|e| {
                        SystemError::Invalid(format!("field `maps[{i}]`: {e}"))
                    })?);
                }
                Concrete::Poly(Arc::new(PolyMapSystem::new(out)?), None)
            }
            SystemKindSpec::Lattes { a, b } => {
                let (a, b) = (parse_int("a", a)?, parse_int("b", b)?);
                let f = lattes_duplication(&a, &b)?;
                Concrete::Poly(Arc::new(PolyMapSystem::new(vec![f])?), Some((a, b)))
            }
            SystemKindSpec::K3222 { terms } => {
                let mut t = Vec::new();
                for term in terms {
                    let [a, b, c] = term.exponents[..] else {
                        return Err(SystemError::Invalid("field `terms`: exponents must have length 3".into()));
                    };
                    t.push(([a, b, c], parse_int("terms.coeff", &term.coeff)?));
                }
                Concrete::Trilinear(Arc::new(K3TrilinearSystem::from_affine_terms(&t)?))
            }
            SystemKindSpec::K3Wheeler { f11, f22, points } => {
                let forms = [bi_poly("f11", f11)?, bi_poly("f22", f22)?];
                Concrete::DoubleCover(Arc::new(K3DoubleCoverSystem::new(
                    DoubleCoverVariant::Wheeler,
                    forms,
                    parse_points(points)?,
                )?))
            }
            SystemKindSpec::K31221 { f12, f21, points } => {
                let forms = [bi_poly("f12", f12)?, bi_poly("f21", f21)?];
                Concrete::DoubleCover(Arc::new(K3DoubleCoverSystem::new(
                    DoubleCoverVariant::OneTwoTwoOne,
                    forms,
                    parse_points(points)?,
                )?))
            }
            SystemKindSpec::Henon { a, b } => {
                let a = parse_rational(a).map_err(|_| SystemError::Invalid(format!("field `a`: bad rational {a:?}")))?;
                let b = parse_rational(b).map_err(|_| SystemError::Invalid(format!("field `b`: bad rational {b:?}")))?;
                Concrete::Henon(Arc::new(HenonSystem::new(a, b)?))
            }
        };
        Self::assemble(concrete, spec.weights.clone(), spec.degree)
    }

    fn assemble(concrete: Concrete, weights: Option<Vec<f64>>, degree: Option<f64>) -> Result<Self, SystemError> {
        let base: Arc<dyn Dynamics> = match &concrete {
            Concrete::Poly(p, _) => p.clone(),
            Concrete::Trilinear(s) => s.clone(),
            Concrete::DoubleCover(s) => s.clone(),
            Concrete::Henon(h) => h.clone(),
        };
        let dynamics: Arc<dyn Dynamics> = if weights.is_some() || degree.is_some() {
            if matches!(concrete, Concrete::Henon(_)) {
                return Err(SystemError::Invalid("Hénon systems take no weights or degree".into()));
            }
            let words = (0..base.num_maps()).map(|i| vec![i]).collect();
            let w = weights.clone().unwrap_or_else(|| base.weights());
            let d = degree.unwrap_or_else(|| base.degree());
            Arc::new(WordSystem::new(base, words, w, d)?)
        } else {
            base
        };
        Ok(System { concrete, overrides: (weights, degree), dynamics })
    }

    pub fn from_json(text: &str) -> Result<Self, SystemError> {
        let spec: SystemSpec = serde_json::from_str(text)
            .map_err(|e| SystemError::Invalid(format!("line {} column {}: {e}", e.line(), e.column())))?;
        Self::from_spec(&spec)
    }

    pub fn poly(sys: PolyMapSystem) -> Self {
        Self::assemble(Concrete::Poly(Arc::new(sys), None), None, None).expect("no overrides")
    }

    pub fn trilinear(sys: K3TrilinearSystem) -> Self {
        Self::assemble(Concrete::Trilinear(Arc::new(sys)), None, None).expect("no overrides")
    }

    pub fn double_cover(sys: K3DoubleCoverSystem) -> Self {
        Self::assemble(Concrete::DoubleCover(Arc::new(sys)), None, None).expect("no overrides")
    }

    pub fn henon(sys: HenonSystem) -> Self {
        Self::assemble(Concrete::Henon(Arc::new(sys)), None, None).expect("no overrides")
    }

    /// Regenerates a description from the model.
    pub fn to_spec(&self) -> SystemSpec {
        let kind = match &self.concrete {
            Concrete::Poly(_, Some((a, b))) => SystemKindSpec::Lattes { a: a.to_string(), b: b.to_string() },
            Concrete::Poly(p, None) => SystemKindSpec::PolyPn {
                dimension: p.dim(),
                maps: p.maps().iter().map(|m| m.polys().iter().map(Poly::to_spec).collect()).collect(),
            },
            Concrete::Trilinear(s) => SystemKindSpec::K3222 {
                terms: s
                    .affine_terms()
                    .into_iter()
                    .map(|(e, c)| TermSpec { exponents: e.to_vec(), coeff: c.to_string() })
                    .collect(),
            },
            Concrete::DoubleCover(s) => {
                let [f, g] = s.forms();
                let points = s.seeds().iter().map(|p| p.to_string()).collect();
                match s.variant() {
                    DoubleCoverVariant::Wheeler => SystemKindSpec::K3Wheeler { f11: bi_spec(f), f22: bi_spec(g), points },
                    DoubleCoverVariant::OneTwoTwoOne => {
                        SystemKindSpec::K31221 { f12: bi_spec(f), f21: bi_spec(g), points }
                    }
                }
            }
            Concrete::Henon(h) => SystemKindSpec::Henon { a: h.a().to_string(), b: h.b().to_string() },
        };
        SystemSpec { kind, weights: self.overrides.0.clone(), degree: self.overrides.1 }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_spec()).expect("serializable")
    }

    pub fn dynamics(&self) -> &Arc<dyn Dynamics> {
        &self.dynamics
    }

    pub fn as_poly(&self) -> Option<&Arc<PolyMapSystem>> {
        match &self.concrete {
            Concrete::Poly(p, _) if self.overrides == (None, None) => Some(p),
            _ => None,
        }
    }

    pub fn as_trilinear(&self) -> Option<&Arc<K3TrilinearSystem>> {
        match &self.concrete {
            Concrete::Trilinear(s) => Some(s),
            _ => None,
        }
    }

    pub fn as_double_cover(&self) -> Option<&Arc<K3DoubleCoverSystem>> {
        match &self.concrete {
            Concrete::DoubleCover(s) => Some(s),
            _ => None,
        }
    }

    pub fn as_henon(&self) -> Option<&Arc<HenonSystem>> {
        match &self.concrete {
            Concrete::Henon(h) => Some(h),
            _ => None,
        }
    }
}

impl std::ops::Deref for System {
    type Target = dyn Dynamics;

    fn deref(&self) -> &Self::Target {
        self.dynamics.as_ref()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_round_trips() {
        let text = r#"{"type": "poly_pn", "dimension": 1,
            "maps": [[[{"exponents": [2, 0], "coeff": "1"}], [{"exponents": [0, 2], "coeff": "1"}]]]}"#;
        let sys = System::from_json(text).unwrap();
        assert_eq!(sys.degree(), 2.0);
        let again = System::from_json(&sys.to_json()).unwrap();
        assert_eq!(again.to_spec(), sys.to_spec());
        let x: ProjPoint = "(2:3)".parse().unwrap();
        assert_eq!(sys.evaluate(0, &x).unwrap().to_string(), "(4:9)");
    }

    #[test]
    fn reports_field_errors() {
        let err = System::from_json(r#"{"type": "lattes", "a": "x", "b": "1"}"#).unwrap_err();
        assert!(err.to_string().contains("`a`"));
        let err = System::from_json("{\"type\": \"nope\"}").unwrap_err();
        assert!(err.to_string().contains("line 1"));
    }

    #[test]
    fn henon_and_k3_specs() {
        let h = System::from_json(r#"{"type": "henon", "a": "1", "b": "-1/2"}"#).unwrap();
        assert!(h.as_henon().is_some());
        assert_eq!(System::from_json(&h.to_json()).unwrap().to_spec(), h.to_spec());
        let k3 = System::trilinear(K3TrilinearSystem::unit_cube_example());
        let back = System::from_json(&k3.to_json()).unwrap();
        assert_eq!(back.as_trilinear().unwrap().as_ref(), &K3TrilinearSystem::unit_cube_example());
    }
}
