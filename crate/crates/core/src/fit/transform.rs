//! Bijection between the kernel's constrained parameters and the
//! unconstrained space the simplex search walks in.
//!
//! Positive parameters (variances, ranges, smoothness) travel in log space;
//! interval-bounded exponents travel through a logit over their box; the
//! nugget travels in log space with a small floor standing in for exactly 0.
//! Decoding clamps into the fitting boxes, so every decoded vector is a
//! valid `set_params` input.

use crate::kernels::{KernelSpec, NUGGET_SIGMA_FACTOR};

const NUGGET_FLOOR: f64 = 1e-13;
const LOGIT_MARGIN: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
enum Scale {
    /// ln(v), decoded with a clamp to [lower, upper].
    Log,
    /// logit of the position inside [lower, upper].
    Logit,
    /// ln(max(v, floor)); decode clamps to [0, factor * sigma] against the
    /// sigma decoded from the same vector.
    LogNugget,
}

#[derive(Debug, Clone)]
struct Slot {
    lower: f64,
    upper: f64,
    scale: Scale,
    template_value: f64,
    free: bool,
}

/// Transform for one kernel template plus a set of held-fixed names.
#[derive(Debug, Clone)]
pub struct ParamTransform {
    slots: Vec<Slot>,
    sigma_index: Option<usize>,
    names: Vec<String>,
}

impl ParamTransform {
    /// `fixed` entries must name parameters of the template; unknown names
    /// are reported back so typos do not silently fit everything.
    pub fn new(template: &KernelSpec, fixed: &[String]) -> Result<Self, String> {
        let infos = template.param_vector();
        let names: Vec<String> = infos.iter().map(|p| p.name.clone()).collect();
        for f in fixed {
            if !names.contains(f) {
                return Err(format!(
                    "unknown fixed parameter \"{f}\" for family {}",
                    template.family_name()
                ));
            }
        }
        let sigma_index = names.iter().position(|n| n == "sigma");
        let slots = infos
            .iter()
            .map(|info| {
                let scale = match info.name.as_str() {
                    "alpha" | "lat_alpha" => Scale::Logit,
                    "nugget" => Scale::LogNugget,
                    _ => Scale::Log,
                };
                Slot {
                    lower: info.lower,
                    upper: info.upper,
                    scale,
                    template_value: info.value,
                    free: !fixed.contains(&info.name),
                }
            })
            .collect();
        Ok(Self {
            slots,
            sigma_index,
            names,
        })
    }

    pub fn n_free(&self) -> usize {
        self.slots.iter().filter(|s| s.free).count()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    /// Full value vector -> unconstrained coordinates of the free slots.
    pub fn encode(&self, values: &[f64]) -> Vec<f64> {
        assert_eq!(values.len(), self.slots.len());
        self.slots
            .iter()
            .zip(values)
            .filter(|(slot, _)| slot.free)
            .map(|(slot, &v)| match slot.scale {
                Scale::Log => v.ln(),
                Scale::LogNugget => v.max(NUGGET_FLOOR).ln(),
                Scale::Logit => {
                    let frac = ((v - slot.lower) / (slot.upper - slot.lower))
                        .clamp(LOGIT_MARGIN, 1.0 - LOGIT_MARGIN);
                    (frac / (1.0 - frac)).ln()
                }
            })
            .collect()
    }

    /// Unconstrained coordinates -> full value vector (fixed slots keep the
    /// template's values). Always lands inside the fitting boxes.
    pub fn decode(&self, coords: &[f64]) -> Vec<f64> {
        assert_eq!(coords.len(), self.n_free());
        let mut out = Vec::with_capacity(self.slots.len());
        let mut it = coords.iter();
        for slot in &self.slots {
            let v = if slot.free {
                let u = *it.next().expect("length checked");
                match slot.scale {
                    Scale::Log => u.exp().clamp(slot.lower, slot.upper),
                    Scale::LogNugget => u.exp(), // clamped against sigma below
                    Scale::Logit => {
                        let frac = 1.0 / (1.0 + (-u).exp());
                        slot.lower + (slot.upper - slot.lower) * frac
                    }
                }
            } else {
                slot.template_value
            };
            out.push(v);
        }
        // The nugget box follows whatever sigma this vector carries.
        for (i, slot) in self.slots.iter().enumerate() {
            if slot.scale == Scale::LogNugget && slot.free {
                let sigma = self.sigma_index.map_or(slot.upper / NUGGET_SIGMA_FACTOR, |s| out[s]);
                out[i] = out[i].clamp(0.0, NUGGET_SIGMA_FACTOR * sigma);
            }
        }
        out
    }
}
