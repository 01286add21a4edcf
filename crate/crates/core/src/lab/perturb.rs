//! Perturbation families for measures and for second-order laws.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spaces::{DiscreteSpace, LawAtom, Layout, Measure, SecondOrderLaw};

/// A one-parameter family `scale ↦ μ₁` with `μ₁ = μ₀` at scale 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Perturbation {
    /// Moves the fraction `scale` of the mass at `from` to `to`.
    MassShift { from: usize, to: usize },
    /// `(1 - scale) μ₀ + scale T#μ₀` with `T` a shift by `steps` grid
    /// points (clamped on an interval, wrapped on a circle).
    PushForward { steps: isize },
    /// `μ₀ (1 + scale f)` renormalized, `f(x) = 1 - 2 d(x, center) / diam`.
    Tilt { center: usize },
}

fn shifted_index(space: &DiscreteSpace, x: usize, steps: isize) -> Result<usize> {
    let n = space.point_count() as isize;
    match space.layout() {
        Layout::Interval { .. } => Ok((x as isize + steps).clamp(0, n - 1) as usize),
        Layout::Circle { .. } => Ok((x as isize + steps).rem_euclid(n) as usize),
        other => Err(Error::NoStencil(format!(
            "grid shift needs a 1-D layout, got {other:?}"
        ))),
    }
}

/// Push-forward of `mu` under a grid shift.
pub(crate) fn shift_measure(space: &DiscreteSpace, mu: &Measure, steps: isize) -> Result<Measure> {
    let mut out = vec![0.0; mu.len()];
    for &x in mu.support() {
        out[shifted_index(space, x, steps)?] += mu.weight(x);
    }
    Measure::normalized(out)
}

fn tilt(space: &DiscreteSpace, mu: &Measure, center: usize, scale: f64) -> Result<Measure> {
    if center >= space.point_count() {
        return Err(Error::InvalidParameter(format!(
            "tilt center {center} out of range"
        )));
    }
    if !(0.0..1.0).contains(&scale) {
        return Err(Error::InvalidParameter(format!(
            "tilt scale {scale} must lie in [0, 1)"
        )));
    }
    let diam = space.diameter();
    let w = (0..mu.len())
        .map(|x| mu.weight(x) * (1.0 + scale * (1.0 - 2.0 * space.dist(x, center) / diam)))
        .collect();
    Measure::normalized(w)
}

/// Applies a measure perturbation at the given scale.
pub fn perturb_measure(
    space: &DiscreteSpace,
    mu0: &Measure,
    p: &Perturbation,
    scale: f64,
) -> Result<Measure> {
    mu0.check_on(space)?;
    if !(scale.is_finite() && (0.0..=1.0).contains(&scale)) {
        return Err(Error::InvalidParameter(format!(
            "perturbation scale {scale} outside [0, 1]"
        )));
    }
    if scale == 0.0 {
        return Ok(mu0.clone());
    }
    let out = match *p {
        Perturbation::MassShift { from, to } => {
            let n = space.point_count();
            if from >= n || to >= n {
                return Err(Error::InvalidParameter(format!(
                    "mass shift sites {from}, {to} out of range"
                )));
            }
            let mut w = mu0.weights().to_vec();
            let moved = scale * w[from];
            w[from] -= moved;
            w[to] += moved;
            Measure::normalized(w)?
        }
        Perturbation::PushForward { steps } => {
            mu0.mix(&shift_measure(space, mu0, steps)?, scale)?
        }
        Perturbation::Tilt { center } => tilt(space, mu0, center, scale)?,
    };
    if out == *mu0 {
        return Err(Error::DegeneratePerturbation(scale));
    }
    Ok(out)
}

/// Random perturbations of a second-order law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LawPerturbation {
    /// Each atom becomes `(1 - scale) ρ + scale T#ρ` for a random grid
    /// shift `T` of at most `max_steps` points (a random tilt on spaces
    /// without a 1-D layout).
    AtomJitter { max_steps: usize },
    /// Weights `λ_k (1 + scale u_k)` renormalized, `u_k` uniform in `[-1, 1]`.
    WeightJitter,
    /// Adds a Dirichlet-random atom with weight `scale`.
    AtomAddition,
}

pub fn perturb_law<R: Rng + ?Sized>(
    space: &DiscreteSpace,
    law: &SecondOrderLaw,
    p: &LawPerturbation,
    scale: f64,
    rng: &mut R,
) -> Result<SecondOrderLaw> {
    law.check_on(space)?;
    if !(scale.is_finite() && (0.0..=1.0).contains(&scale)) {
        return Err(Error::InvalidParameter(format!(
            "perturbation scale {scale} outside [0, 1]"
        )));
    }
    let n = space.point_count();
    match *p {
        LawPerturbation::AtomJitter { max_steps } => {
            if max_steps == 0 {
                return Err(Error::InvalidParameter(
                    "atom jitter needs max_steps >= 1".into(),
                ));
            }
            let one_d = matches!(
                space.layout(),
                Layout::Interval { .. } | Layout::Circle { .. }
            );
            let atoms = law
                .atoms()
                .iter()
                .map(|a| {
                    let measure = if one_d {
                        let size = rng.random_range(1..=max_steps) as isize;
                        let steps = if rng.random::<bool>() { size } else { -size };
                        a.measure
                            .mix(&shift_measure(space, &a.measure, steps)?, scale)?
                    } else {
                        let center = rng.random_range(0..n);
                        tilt(space, &a.measure, center, scale.min(0.99))?
                    };
                    Ok(LawAtom {
                        measure,
                        weight: a.weight,
                        good: None,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            SecondOrderLaw::from_atoms(atoms)
        }
        LawPerturbation::WeightJitter => {
            let atoms = law
                .atoms()
                .iter()
                .map(|a| LawAtom {
                    weight: a.weight * (1.0 + scale * rng.random_range(-1.0..=1.0)),
                    ..a.clone()
                })
                .collect();
            SecondOrderLaw::from_atoms(atoms)
        }
        LawPerturbation::AtomAddition => {
            let extra = super::flat_dirichlet(n, rng)?;
            let mut atoms: Vec<LawAtom> = law
                .atoms()
                .iter()
                .map(|a| LawAtom {
                    weight: a.weight * (1.0 - scale),
                    ..a.clone()
                })
                .collect();
            atoms.push(LawAtom {
                measure: extra,
                weight: scale,
                good: None,
            });
            SecondOrderLaw::from_atoms(atoms)
        }
    }
}
