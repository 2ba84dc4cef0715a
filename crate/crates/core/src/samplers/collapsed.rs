//! Rejection sampling with the last private kick of each wire integrated out.
//!
//! Every final angle is an integer-linear form (mod π) in the random
//! variables: one uniform per shared-random group of each init layer and one
//! kick per kicked wire and layer. A kick that enters a single wire with
//! coefficient ±1 is private to it; the acceptance probability of that wire
//! given everything else is then a closed-form window mass
//! `m_j = m_{j,0} + m_{j,1}`, and its bit is drawn with odds `m_{j,0} : m_{j,1}`.
//!
//! The remaining variables are proposed in order, non-private kicks from
//! their law and uniforms from a mixture of the prior and, per wire anchored
//! at that uniform, the law of the uniform that puts the wire inside one of
//! its windows after a fresh kick. The importance ratio `r` has
//! `E[r] = P(naive trial accepted)`; accepting with probability `r/K` for a
//! bound `K ≥ r` yields exact draws from the post-selected distribution.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::bits::{Bitstring, MAX_BITS};
use crate::hvmodel::{DeterministicGate, HVModel, InitSpec, KickLaw, Layer};
use crate::math::{self, FRAC_PI_2, PI};

/// Weight of the prior in each uniform's proposal mixture.
pub const PRIOR_WEIGHT: f64 = 0.1;

/// Multiplier applied to numerically located suprema.
pub const SUP_SAFETY: f64 = 1.02;

const MAX_GRID: usize = 1 << 22;

#[derive(Clone, Debug, PartialEq)]
enum RawVar {
    Uniform,
    Kick(KickLaw),
}

#[derive(Clone, Debug, PartialEq)]
enum RestKind {
    Uniform,
    Kick(KickLaw),
}

#[derive(Clone, Debug, PartialEq)]
struct RestVar {
    kind: RestKind,
    /// Wires whose last rest variable is this one, with coefficient ±1.
    anchored: Vec<usize>,
    /// `(1 - α)·π / (|anchored|·Z)` with `Z = 4δφ_M`.
    kernel_scale: f64,
}

#[derive(Clone, Debug, PartialEq)]
struct WirePlan {
    theta: f64,
    private: Option<KickLaw>,
    /// `(rest index, coefficient)`, increasing in rest index.
    terms: Vec<(usize, i64)>,
    constant: f64,
    anchor: Option<(usize, i64)>,
}

/// Precomputed structure of a constrained model for collapsed sampling.
#[derive(Clone, Debug, PartialEq)]
pub struct CollapsedPlan {
    tolerance: f64,
    wires: Vec<WirePlan>,
    rest: Vec<RestVar>,
    bound: f64,
}

/// One proposal.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Proposal {
    /// Importance ratio.
    pub ratio: f64,
    /// Output bits when accepted.
    pub bits: Option<Bitstring>,
    /// True when `ratio` exceeded the bound.
    pub bound_violated: bool,
}

/// Scratch buffers reused across proposals.
#[derive(Clone, Debug, Default)]
pub struct Scratch {
    values: Vec<f64>,
    masses: Vec<(f64, f64)>,
}

impl CollapsedPlan {
    /// Linearizes `model` and computes the acceptance bound.
    ///
    /// Panics if the measurement is unconstrained.
    pub fn new(model: &HVModel) -> Self {
        let m = model.measurement();
        assert!(m.constrained, "collapsed sampling needs a constrained measurement");
        let n = model.n_wires();
        let mut vars: Vec<RawVar> = Vec::new();
        let mut coefs: Vec<Vec<i64>> = vec![Vec::new(); n];
        let mut constants = vec![0.0; n];
        let widen = |coefs: &mut Vec<Vec<i64>>, len: usize| {
            for c in coefs.iter_mut() {
                c.resize(len, 0);
            }
        };
        for layer in model.layers() {
            match layer {
                Layer::Init(assignments) => {
                    let mut groups: Vec<(u32, usize)> = Vec::new();
                    for &(wire, spec) in assignments {
                        match spec {
                            InitSpec::Fixed(a) => {
                                coefs[wire].iter_mut().for_each(|c| *c = 0);
                                constants[wire] = a;
                            }
                            InitSpec::SharedRandom(g) => {
                                let var = match groups.iter().find(|(h, _)| *h == g) {
                                    Some(&(_, v)) => v,
                                    None => {
                                        vars.push(RawVar::Uniform);
                                        widen(&mut coefs, vars.len());
                                        groups.push((g, vars.len() - 1));
                                        vars.len() - 1
                                    }
                                };
                                coefs[wire].iter_mut().for_each(|c| *c = 0);
                                coefs[wire][var] = 1;
                                constants[wire] = 0.0;
                            }
                        }
                    }
                }
                Layer::Gate(DeterministicGate::AddControlToTarget { control, target }) => {
                    let (src, k) = (coefs[*control].clone(), constants[*control]);
                    for (t, s) in coefs[*target].iter_mut().zip(src) {
                        *t += s;
                    }
                    constants[*target] += k;
                }
                Layer::Gate(DeterministicGate::AddConstant { wire, angle }) => constants[*wire] += angle,
                Layer::Gate(_) => {}
                Layer::Kick { wires, params } => {
                    for &w in wires {
                        vars.push(RawVar::Kick(*params.law()));
                        widen(&mut coefs, vars.len());
                        coefs[w][vars.len() - 1] = 1;
                    }
                }
            }
        }
        widen(&mut coefs, vars.len());

        // last private kick per wire
        let mut private: Vec<Option<usize>> = vec![None; n];
        for (v, var) in vars.iter().enumerate() {
            if !matches!(var, RawVar::Kick(_)) {
                continue;
            }
            let users: Vec<usize> = (0..n).filter(|&j| coefs[j][v] != 0).collect();
            if let [j] = users[..] {
                if coefs[j][v].abs() == 1 {
                    private[j] = Some(v);
                }
            }
        }
        let is_private = |v: usize| private.contains(&Some(v));
        let used = |v: usize| (0..n).any(|j| coefs[j][v] != 0);

        // rest order: non-private kicks, then uniforms
        let mut order: Vec<usize> = Vec::new();
        order.extend((0..vars.len()).filter(|&v| matches!(vars[v], RawVar::Kick(_)) && used(v) && !is_private(v)));
        order.extend((0..vars.len()).filter(|&v| vars[v] == RawVar::Uniform && used(v)));
        let mut rest: Vec<RestVar> = order
            .iter()
            .map(|&v| RestVar {
                kind: match vars[v] {
                    RawVar::Uniform => RestKind::Uniform,
                    RawVar::Kick(law) => RestKind::Kick(law),
                },
                anchored: Vec::new(),
                kernel_scale: 0.0,
            })
            .collect();

        let mut wires = Vec::with_capacity(n);
        for j in 0..n {
            let mut terms: Vec<(usize, i64)> = order
                .iter()
                .enumerate()
                .filter(|&(_, &v)| coefs[j][v] != 0 && Some(v) != private[j])
                .map(|(i, &v)| (i, coefs[j][v]))
                .collect();
            terms.sort_by_key(|t| t.0);
            let anchor = terms
                .last()
                .copied()
                .filter(|&(i, c)| rest[i].kind == RestKind::Uniform && c.abs() == 1);
            if let Some((i, _)) = anchor {
                rest[i].anchored.push(j);
            }
            let law = private[j].map(|v| match vars[v] {
                RawVar::Kick(law) => law,
                RawVar::Uniform => unreachable!(),
            });
            wires.push(WirePlan {
                theta: m.angles[j],
                private: law,
                terms,
                constant: constants[j],
                anchor,
            });
        }
        let z = 4.0 * m.tolerance;
        for r in rest.iter_mut() {
            if !r.anchored.is_empty() {
                r.kernel_scale = (1.0 - PRIOR_WEIGHT) * PI / (r.anchored.len() as f64 * z);
            }
        }
        let mut plan = CollapsedPlan {
            tolerance: m.tolerance,
            wires,
            rest,
            bound: 0.0,
        };
        plan.bound = plan.compute_bound();
        plan
    }

    /// Upper bound `K` on the importance ratio.
    pub fn bound(&self) -> f64 {
        self.bound
    }

    /// Number of variables sampled per proposal.
    pub fn rest_len(&self) -> usize {
        self.rest.len()
    }

    /// Number of wires whose private kick is integrated out.
    pub fn collapsed_wires(&self) -> usize {
        self.wires.iter().filter(|w| w.private.is_some()).count()
    }

    fn masses(&self, j: usize, angle: f64) -> (f64, f64) {
        let w = &self.wires[j];
        let h = self.tolerance;
        match &w.private {
            Some(law) => (
                law.window_mass(w.theta - angle, h),
                law.window_mass(w.theta + FRAC_PI_2 - angle, h),
            ),
            None => {
                let d = math::axis_distance(angle, w.theta);
                (f64::from(u8::from(d < h)), f64::from(u8::from(FRAC_PI_2 - d < h)))
            }
        }
    }

    fn sup_mass(&self, j: usize) -> f64 {
        let w = &self.wires[j];
        match &w.private {
            None => 1.0,
            Some(law) => {
                let h = self.tolerance;
                let f = |x: f64| law.window_mass(x, h) + law.window_mass(x + FRAC_PI_2, h);
                numeric_sup(f, FRAC_PI_2, law.width().min(h) / 8.0)
            }
        }
    }

    fn weight(&self, i: usize, masses: impl Iterator<Item = f64>) -> f64 {
        let (mut prod, mut sum) = (1.0, 0.0);
        for m in masses {
            prod *= m;
            sum += m;
        }
        prod / (PRIOR_WEIGHT + self.rest[i].kernel_scale * sum)
    }

    fn compute_bound(&self) -> f64 {
        let mut bound = 1.0;
        for (i, r) in self.rest.iter().enumerate() {
            if r.anchored.is_empty() {
                continue;
            }
            let isolated = r
                .anchored
                .iter()
                .all(|&j| self.wires[j].private.is_some() && self.wires[j].terms.len() == 1);
            let k = if isolated {
                let spacing = r
                    .anchored
                    .iter()
                    .map(|&j| self.wires[j].private.as_ref().map_or(f64::INFINITY, |l| l.width()))
                    .fold(self.tolerance, f64::min)
                    / 8.0;
                let f = |v: f64| {
                    self.weight(
                        i,
                        r.anchored.iter().map(|&j| {
                            let w = &self.wires[j];
                            let (m0, m1) = self.masses(j, w.terms[0].1 as f64 * v + w.constant);
                            m0 + m1
                        }),
                    )
                };
                numeric_sup(f, PI, spacing)
            } else {
                self.weight(i, r.anchored.iter().map(|&j| self.sup_mass(j)))
            };
            bound *= k;
        }
        for (j, w) in self.wires.iter().enumerate() {
            if w.anchor.is_some() {
                continue;
            }
            bound *= if w.terms.is_empty() {
                let (m0, m1) = self.masses(j, w.constant);
                m0 + m1
            } else {
                self.sup_mass(j)
            };
        }
        bound
    }

    fn angle(&self, j: usize, values: &[f64]) -> f64 {
        let w = &self.wires[j];
        w.terms
            .iter()
            .fold(w.constant, |acc, &(i, c)| acc + c as f64 * values[i])
    }

    /// Draws one proposal and its accept/reject decision.
    pub fn propose<R: Rng + ?Sized>(&self, rng: &mut R, scratch: &mut Scratch) -> Proposal {
        let n = self.wires.len();
        scratch.values.clear();
        scratch.values.resize(self.rest.len(), 0.0);
        scratch.masses.clear();
        scratch.masses.resize(n, (0.0, 0.0));
        let mut ratio = 1.0;
        let rejected = Proposal {
            ratio: 0.0,
            bits: None,
            bound_violated: false,
        };
        for (i, var) in self.rest.iter().enumerate() {
            match &var.kind {
                RestKind::Kick(law) => scratch.values[i] = law.sample(rng),
                RestKind::Uniform if var.anchored.is_empty() => scratch.values[i] = rng.random::<f64>() * PI,
                RestKind::Uniform => {
                    let v = if rng.random::<f64>() < PRIOR_WEIGHT {
                        rng.random::<f64>() * PI
                    } else {
                        let j = var.anchored[rng.random_range(0..var.anchored.len())];
                        let w = &self.wires[j];
                        let bit_offset = if rng.random::<bool>() { FRAC_PI_2 } else { 0.0 };
                        let u = w.theta + bit_offset + (2.0 * rng.random::<f64>() - 1.0) * self.tolerance;
                        let kick = w.private.as_ref().map_or(0.0, |l| l.sample(rng));
                        let (_, c) = w.anchor.expect("anchored wire");
                        scratch.values[i] = 0.0;
                        let known = self.angle(j, &scratch.values);
                        math::wrap_pi(c as f64 * (u - kick - known))
                    };
                    scratch.values[i] = v;
                    let mut masses = [0.0; MAX_BITS];
                    for (slot, &j) in masses.iter_mut().zip(&var.anchored) {
                        let m = self.masses(j, self.angle(j, &scratch.values));
                        scratch.masses[j] = m;
                        *slot = m.0 + m.1;
                    }
                    ratio *= self.weight(i, masses[..var.anchored.len()].iter().copied());
                    if ratio == 0.0 {
                        return rejected;
                    }
                }
            }
        }
        for j in 0..n {
            if self.wires[j].anchor.is_none() {
                let m = self.masses(j, self.angle(j, &scratch.values));
                scratch.masses[j] = m;
                ratio *= m.0 + m.1;
            }
        }
        if ratio == 0.0 {
            return rejected;
        }
        let bound_violated = ratio > self.bound;
        if rng.random::<f64>() * self.bound >= ratio {
            return Proposal {
                ratio,
                bits: None,
                bound_violated,
            };
        }
        let mut bits = [false; MAX_BITS];
        for (bit, &(m0, m1)) in bits.iter_mut().zip(&scratch.masses) {
            *bit = rng.random::<f64>() * (m0 + m1) >= m0;
        }
        Proposal {
            ratio,
            bits: Some(Bitstring::from_bits(&bits[..n])),
            bound_violated,
        }
    }
}

/// Supremum of `f` over one `period`, located on a grid of at most `spacing`
/// and refined locally, times [`SUP_SAFETY`].
fn numeric_sup(f: impl Fn(f64) -> f64, period: f64, spacing: f64) -> f64 {
    let points = (math::ceil(period / spacing) as usize).clamp(64, MAX_GRID);
    let step = period / points as f64;
    let mut best: Vec<(f64, f64)> = Vec::with_capacity(5);
    for k in 0..points {
        let x = k as f64 * step;
        let y = f(x);
        if best.len() < 4 || y > best[best.len() - 1].1 {
            best.push((x, y));
            best.sort_by(|a, b| b.1.total_cmp(&a.1));
            best.truncate(4);
        }
    }
    let mut top = best.first().map_or(0.0, |b| b.1);
    for &(x, _) in &best {
        let fine = step / 32.0;
        for k in -32..=32 {
            top = top.max(f(x + k as f64 * fine));
        }
    }
    top * SUP_SAFETY
}
