use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::ModelError;

/// A Gaussian bump `amplitude * exp(-|x - center|² / width²)` on one species.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Bump {
    pub species: String,
    pub amplitude: f64,
    pub center: [f64; 3],
    pub width: f64,
}

/// Constant background plus Gaussian bumps. Species absent from `background`
/// start at zero.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InitialData {
    pub background: BTreeMap<String, f64>,
    pub bumps: Vec<Bump>,
}

/// [`InitialData`] with species names resolved against a model.
#[derive(Debug, Clone)]
pub struct ResolvedInitial {
    background: Vec<f64>,
    bumps: Vec<(usize, f64, [f64; 3], f64)>,
}

impl InitialData {
    pub fn resolve(&self, species: &[String]) -> Result<ResolvedInitial, ModelError> {
        let find = |name: &str| {
            species.iter().position(|s| s == name).ok_or_else(|| ModelError::Param {
                name: "initial",
                msg: format!("unknown species `{name}` (model has {})", species.join(", ")),
            })
        };
        let mut background = vec![0.0; species.len()];
        for (name, v) in &self.background {
            background[find(name)?] = *v;
        }
        let mut bumps = Vec::with_capacity(self.bumps.len());
        for b in &self.bumps {
            if !(b.width > 0.0) || !b.amplitude.is_finite() {
                return Err(ModelError::Param { name: "initial", msg: format!("bump on `{}` needs width > 0", b.species) });
            }
            bumps.push((find(&b.species)?, b.amplitude, b.center, b.width));
        }
        Ok(ResolvedInitial { background, bumps })
    }
}

impl ResolvedInitial {
    pub fn eval(&self, x: &[f64; 3], out: &mut [f64]) {
        out[..self.background.len()].copy_from_slice(&self.background);
        for &(s, a, c, w) in &self.bumps {
            let r2: f64 = (0..3).map(|d| (x[d] - c[d]).powi(2)).sum();
            out[s] += a * (-r2 / (w * w)).exp();
        }
    }

    pub fn is_zero(&self) -> bool {
        self.background.iter().all(|&v| v == 0.0) && self.bumps.iter().all(|b| b.1 == 0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bump_peak_and_background() {
        let names: Vec<String> = ["n1", "n3", "c1"].iter().map(|s| s.to_string()).collect();
        let d = InitialData {
            background: [("c1".to_string(), 0.01)].into_iter().collect(),
            bumps: vec![Bump { species: "n3".into(), amplitude: 2.0, center: [0.5, 0.5, 0.0], width: 0.1 }],
        };
        let r = d.resolve(&names).unwrap();
        let mut out = [9.0; 3];
        r.eval(&[0.5, 0.5, 0.0], &mut out);
        assert_eq!(out, [0.0, 2.0, 0.01]);
        r.eval(&[0.6, 0.5, 0.0], &mut out);
        assert!((out[1] - 2.0 * (-1.0f64).exp()).abs() < 1e-14);
        let bad = InitialData { background: [("c9".to_string(), 1.0)].into_iter().collect(), bumps: vec![] };
        assert!(bad.resolve(&names).is_err());
    }
}
