//! Quantum marginal models built from small dense complex matrices: a
//! two-qubit family measured in a fixed Bloch plane (two settings per side,
//! or a 2k-cycle of alternating settings), a qutrit five-cycle model, and a
//! four-qubit two-source model with a joint Bell-basis measurement in the
//! middle.

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::boxworld::{MarginalModel, Table};
use crate::scenario::{self, MarginalScenario};
use crate::{Error, Result};

pub type CMat = DMatrix<Complex64>;
pub type CVec = DVector<Complex64>;

/// Unit-norm tolerance for state vectors.
pub const STATE_NORM_TOL: f64 = 1e-12;
/// Tolerance for the projector algebra checks (Hermiticity, idempotence,
/// mutual orthogonality, completeness).
pub const PROJECTOR_TOL: f64 = 1e-12;

/// Plane angles (θ_A0, θ_A1, θ_B0, θ_B1) at which the plain correlator
/// expression reaches its quantum maximum 2√2 on the maximally entangled
/// two-qubit state.
pub const TSIRELSON_ANGLES: [f64; 4] = [0.0, -FRAC_PI_2, FRAC_PI_4, -FRAC_PI_4];

/// Parameters (α, θ, φ) at which the entropic five-cycle violation of
/// [`klyachko_quantum_box`] peaks, ≈ +0.0911.
pub const KLYACHKO_OPTIMUM: [f64; 3] = [0.29736, 0.24131, 0.24131];

fn re(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

fn max_abs(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// A pure state on a small Hilbert space.
#[derive(Clone, Debug)]
pub struct StateVector {
    pub amplitudes: CVec,
}

impl StateVector {
    pub fn new(amplitudes: CVec) -> Result<StateVector> {
        let norm = amplitudes.norm();
        if !norm.is_finite() || (norm - 1.0).abs() > STATE_NORM_TOL {
            return Err(Error::Domain(format!(
                "state vector has norm {norm}, expected 1 within {STATE_NORM_TOL:e}"
            )));
        }
        Ok(StateVector { amplitudes })
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }
}

/// A projective measurement, stored as one projector per outcome.
#[derive(Clone, Debug)]
pub struct Observable {
    pub projectors: Vec<CMat>,
}

impl Observable {
    /// Validates that the parts form a projective measurement: each matrix
    /// Hermitian and idempotent, all mutually orthogonal, and summing to the
    /// identity.
    pub fn from_projectors(projectors: Vec<CMat>) -> Result<Observable> {
        if projectors.len() < 2 {
            return Err(Error::Shape("a measurement needs at least 2 outcomes".into()));
        }
        let d = projectors[0].nrows();
        for (k, p) in projectors.iter().enumerate() {
            if p.nrows() != d || p.ncols() != d {
                return Err(Error::Shape(format!(
                    "projector {k} is {}x{}, expected {d}x{d}",
                    p.nrows(),
                    p.ncols()
                )));
            }
            if max_abs(&(p.adjoint() - p)) > PROJECTOR_TOL {
                return Err(Error::Domain(format!("projector {k} is not Hermitian")));
            }
            if max_abs(&(p * p - p)) > PROJECTOR_TOL {
                return Err(Error::Domain(format!("projector {k} is not idempotent")));
            }
        }
        for i in 0..projectors.len() {
            for j in i + 1..projectors.len() {
                if max_abs(&(&projectors[i] * &projectors[j])) > PROJECTOR_TOL {
                    return Err(Error::Domain(format!(
                        "projectors {i} and {j} are not orthogonal"
                    )));
                }
            }
        }
        let mut sum = CMat::zeros(d, d);
        for p in &projectors {
            sum += p;
        }
        if max_abs(&(sum - CMat::identity(d, d))) > PROJECTOR_TOL {
            return Err(Error::Domain("projectors do not sum to the identity".into()));
        }
        Ok(Observable { projectors })
    }

    /// Splits a Hermitian matrix with eigenvalues ±1 into the two projectors
    /// (1 ± M)/2; outcome 0 is the +1 eigenspace.
    pub fn two_outcome(matrix: &CMat) -> Result<Observable> {
        let d = matrix.nrows();
        let id = CMat::identity(d, d);
        Observable::from_projectors(vec![
            (&id + matrix).scale(0.5),
            (&id - matrix).scale(0.5),
        ])
    }

    pub fn outcomes(&self) -> usize {
        self.projectors.len()
    }

    pub fn dim(&self) -> usize {
        self.projectors[0].nrows()
    }
}

/// The qubit observable sin(θ)·σ_y + cos(θ)·σ_z, i.e. a ±1 measurement in
/// the y–z Bloch plane. Outcome 0 is the +1 eigenspace.
pub fn plane_observable(theta: f64) -> Observable {
    let (s, c) = theta.sin_cos();
    let m = CMat::from_row_slice(
        2,
        2,
        &[re(c), Complex64::new(0.0, -s), Complex64::new(0.0, s), re(-c)],
    );
    Observable::two_outcome(&m).expect("plane observables square to the identity")
}

/// The general qubit observable n·σ for the Bloch direction
/// n = (sinθ·cosφ, sinθ·sinφ, cosθ). `bloch_observable(θ, π/2)` is the
/// y–z-plane observable; the extra azimuth exists so optimizations can be
/// re-run over the full sphere.
pub fn bloch_observable(theta: f64, phi: f64) -> Observable {
    let (st, ct) = theta.sin_cos();
    let m = CMat::from_row_slice(
        2,
        2,
        &[
            re(ct),
            st * Complex64::new(phi.cos(), -phi.sin()),
            st * Complex64::new(phi.cos(), phi.sin()),
            re(-ct),
        ],
    );
    Observable::two_outcome(&m).expect("Bloch observables square to the identity")
}

fn kron_vec(a: &CVec, b: &CVec) -> CVec {
    let mut out = CVec::zeros(a.len() * b.len());
    for i in 0..a.len() {
        for j in 0..b.len() {
            out[i * b.len() + j] = a[i] * b[j];
        }
    }
    out
}

fn expectation(state: &CVec, op: &CMat) -> f64 {
    state.dotc(&(op * state)).re
}

/// The two-qubit state cos(α)|00⟩ + sin(α)|11⟩.
pub fn two_qubit_state(alpha: f64) -> StateVector {
    let amps = CVec::from_vec(vec![re(alpha.cos()), re(0.0), re(0.0), re(alpha.sin())]);
    StateVector::new(amps).expect("cos²+sin² = 1")
}

/// Two-setting/two-outcome two-party box from the state cos(α)|00⟩+sin(α)|11⟩
/// with all four measurements in the y–z Bloch plane. Angle order:
/// (θ_A0, θ_A1, θ_B0, θ_B1).
pub fn chsh_quantum_box(alpha: f64, angles: &[f64; 4]) -> Result<MarginalModel> {
    if !(alpha > 0.0 && alpha < FRAC_PI_2) {
        return Err(Error::Domain(format!("state angle α={alpha} outside (0, π/2)")));
    }
    let obs: Vec<Observable> = angles.iter().map(|&t| plane_observable(t)).collect();
    chsh_box_from_observables(alpha, &obs)
}

/// As [`chsh_quantum_box`], but each measurement gets a full Bloch direction
/// (θ, φ) instead of a single in-plane angle.
pub fn chsh_quantum_box_bloch(alpha: f64, angles: &[(f64, f64); 4]) -> Result<MarginalModel> {
    if !(alpha > 0.0 && alpha < FRAC_PI_2) {
        return Err(Error::Domain(format!("state angle α={alpha} outside (0, π/2)")));
    }
    let obs: Vec<Observable> =
        angles.iter().map(|&(t, p)| bloch_observable(t, p)).collect();
    chsh_box_from_observables(alpha, &obs)
}

fn chsh_box_from_observables(alpha: f64, obs: &[Observable]) -> Result<MarginalModel> {
    let psi = two_qubit_state(alpha);
    let mut tables = BTreeMap::new();
    for x in 0..2 {
        for y in 0..2 {
            let mut t = vec![0.0; 4];
            for a in 0..2 {
                for b in 0..2 {
                    let op = obs[x].projectors[a].kronecker(&obs[2 + y].projectors[b]);
                    t[a * 2 + b] = expectation(&psi.amplitudes, &op);
                }
            }
            tables.insert(format!("A{x},B{y}"), Table::Float(t));
        }
    }
    MarginalModel::from_tables(scenario::bell(2, 2, 2)?, tables)
}

/// 2k-cycle box from the state cos(α)|00⟩+sin(α)|11⟩: odd-position
/// observables X1, X3, … are first-qubit measurements, even positions are
/// second-qubit measurements, all in the y–z plane. The first `k` angles are
/// the odd-position settings in order, the last `k` the even-position ones.
pub fn chained_quantum_box(alpha: f64, k: usize, angles: &[f64]) -> Result<MarginalModel> {
    if k < 2 {
        return Err(Error::Domain(format!("chained construction needs k ≥ 2, got {k}")));
    }
    if angles.len() != 2 * k {
        return Err(Error::Shape(format!(
            "expected {} angles for k={k}, got {}",
            2 * k,
            angles.len()
        )));
    }
    let n = 2 * k;
    let psi = two_qubit_state(alpha);
    // 1-based cycle position m ↦ its projector list.
    let obs_at = |m: usize| -> Observable {
        let idx = if m % 2 == 1 { (m - 1) / 2 } else { k + m / 2 - 1 };
        plane_observable(angles[idx])
    };
    let s = scenario::ncycle(n)?;
    let mut tables = BTreeMap::new();
    for i in 1..=n {
        let (u, v) = if i < n { (i, i + 1) } else { (1, n) };
        let (ou_obs, ov_obs) = (obs_at(u), obs_at(v));
        let mut t = vec![0.0; 4];
        for ou in 0..2 {
            for ov in 0..2 {
                // The odd position measures the first qubit.
                let op = if u % 2 == 1 {
                    ou_obs.projectors[ou].kronecker(&ov_obs.projectors[ov])
                } else {
                    ov_obs.projectors[ov].kronecker(&ou_obs.projectors[ou])
                };
                t[ou * 2 + ov] = expectation(&psi.amplitudes, &op);
            }
        }
        tables.insert(format!("X{u},X{v}"), Table::Float(t));
    }
    MarginalModel::from_tables(s, tables)
}

/// The five rank-one directions of the qutrit five-cycle construction;
/// adjacent directions (cyclically, including the pair (5,1)) are
/// orthogonal for every (θ, φ).
pub fn klyachko_vectors(theta: f64, phi: f64) -> Result<[[f64; 3]; 5]> {
    let (st, ct) = theta.sin_cos();
    let (sp, cp) = phi.sin_cos();
    let norm = (st * st + ct * ct * sp * sp).sqrt();
    if norm <= 1e-12 {
        return Err(Error::Domain(format!(
            "degenerate normalization {norm:e} at θ={theta}, φ={phi}"
        )));
    }
    Ok([
        [0.0, 0.0, 1.0],
        [st, ct, 0.0],
        [ct * sp / norm, -st * sp / norm, st * cp / norm],
        [0.0, cp, sp],
        [1.0, 0.0, 0.0],
    ])
}

/// Five-cycle box on the qutrit state ∝ (sinα, cosα, sinα), with X_i the ±1
/// observable 2|v_i⟩⟨v_i| − 1 built from [`klyachko_vectors`]. Outcome 1 of
/// X_i means "along v_i"; adjacent observables never both give 1, so each
/// pair table has P(1,1) = 0 exactly.
pub fn klyachko_quantum_box(alpha: f64, theta: f64, phi: f64) -> Result<MarginalModel> {
    let v = klyachko_vectors(theta, phi)?;
    let (sa, ca) = alpha.sin_cos();
    let norm = (1.0 + sa * sa).sqrt();
    let psi = [sa / norm, ca / norm, sa / norm];
    let p: Vec<f64> = v
        .iter()
        .map(|vi| {
            let dot = vi[0] * psi[0] + vi[1] * psi[1] + vi[2] * psi[2];
            dot * dot
        })
        .collect();
    let s = scenario::ncycle(5)?;
    let mut tables = BTreeMap::new();
    for i in 1..=5 {
        let (u, w) = if i < 5 { (i, i + 1) } else { (1, 5) };
        let (pu, pw) = (p[u - 1], p[w - 1]);
        tables.insert(
            format!("X{u},X{w}"),
            Table::Float(vec![1.0 - pu - pw, pw, pu, 0.0]),
        );
    }
    MarginalModel::from_tables(s, tables)
}

/// Evaluates the symmetric five-cycle combination
/// H(X1,X5) + 2H(X2) + H(X3) − 2H(X1,X2) − 2H(X2,X3) on the box at
/// θ = φ, α = 2φ, divided by its leading small-φ order −(5/2)φ²·log₂(φ²).
/// The ratio approaches 1 from below as φ → 0 (the first correction decays
/// only like 1/log φ).
pub fn smallphi_expansion_check(phi: f64) -> Result<f64> {
    if !(phi > 0.0 && phi < 0.1) {
        return Err(Error::Domain(format!("φ={phi} outside (0, 0.1)")));
    }
    let model = klyachko_quantum_box(2.0 * phi, phi, phi)?;
    let ev = model.entropy_vector()?;
    let h = |name: &str| ev.values[name];
    let lhs = h("X1,X5") + 2.0 * h("X2") + h("X3") - 2.0 * h("X1,X2") - 2.0 * h("X2,X3");
    let leading = -2.5 * phi * phi * (phi * phi).log2();
    Ok(lhs / leading)
}

/// Two-source four-qubit box: sources cos(θ_k)|00⟩ + sin(θ_k)e^{iφ_k}|11⟩ on
/// qubit pairs (1,2) and (3,4); A measures qubit 1 and C measures qubit 4 in
/// the y–z plane (two settings each), B performs the fixed four-outcome
/// Bell-basis measurement on qubits 2,3 with outcome order
/// (|00⟩+|11⟩, |00⟩−|11⟩, |01⟩+|10⟩, |01⟩−|10⟩)/√2.
pub fn bilocal_quantum_box(
    theta1: f64,
    phi1: f64,
    theta2: f64,
    phi2: f64,
    a_angles: &[f64; 2],
    c_angles: &[f64; 2],
) -> Result<MarginalModel> {
    let source = |theta: f64, phi: f64| -> CVec {
        CVec::from_vec(vec![
            re(theta.cos()),
            re(0.0),
            re(0.0),
            theta.sin() * Complex64::new(phi.cos(), phi.sin()),
        ])
    };
    let psi = StateVector::new(kron_vec(&source(theta1, phi1), &source(theta2, phi2)))
        .expect("product of unit-norm sources");

    let inv = re(1.0 / 2.0_f64.sqrt());
    let bell: [CVec; 4] = [
        CVec::from_vec(vec![inv, re(0.0), re(0.0), inv]),
        CVec::from_vec(vec![inv, re(0.0), re(0.0), -inv]),
        CVec::from_vec(vec![re(0.0), inv, inv, re(0.0)]),
        CVec::from_vec(vec![re(0.0), inv, -inv, re(0.0)]),
    ];
    let bell_proj: Vec<CMat> = bell.iter().map(|b| b * b.adjoint()).collect();

    let mut s = scenario::bilocality();
    s.outcome_cardinality.insert("B".to_string(), 4);

    let mut tables = BTreeMap::new();
    for x in 0..2 {
        let pa = plane_observable(a_angles[x]);
        for z in 0..2 {
            let pc = plane_observable(c_angles[z]);
            let mut t = vec![0.0; 16];
            for a in 0..2 {
                for (b, pb) in bell_proj.iter().enumerate() {
                    for c in 0..2 {
                        let op = pa.projectors[a]
                            .kronecker(pb)
                            .kronecker(&pc.projectors[c]);
                        t[a * 8 + b * 2 + c] = expectation(&psi.amplitudes, &op);
                    }
                }
            }
            tables.insert(format!("A{x},B,C{z}"), Table::Float(t));
        }
    }
    MarginalModel::from_tables(s, tables)
}

/// The scenario of [`bilocal_quantum_box`]: the two-source swap scenario
/// with the middle observable widened to four outcomes.
pub fn bilocal_quantum_scenario() -> MarginalScenario {
    let mut s = scenario::bilocality();
    s.outcome_cardinality.insert("B".to_string(), 4);
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boxworld::{
        self, binosig_residual, bilocal_row, check_bilocal_marginal, chsh, chsh_entropic,
        chsh_to_cycle, is_noncontextual, klyachko_k5, ncycle_entropic,
    };
    use crate::opt::maximize;

    const SQRT8: f64 = 2.828427124746190;

    #[test]
    fn tsirelson_settings_reach_the_correlator_maximum() {
        let b = chsh_quantum_box(FRAC_PI_4, &TSIRELSON_ANGLES).unwrap();
        assert!((chsh(&b).unwrap() - SQRT8).abs() < 1e-12);
        let e = chsh_entropic(&b).unwrap();
        assert!(e < 0.0, "correlator-optimal settings must not violate, got {e}");
        assert!((e - (-1.2018)).abs() < 1e-3);
    }

    #[test]
    fn entropic_chsh_maximum_near_0237_on_maximally_entangled_state() {
        let mut obj = |x: &[f64]| {
            let angles = [x[0], x[1], x[2], x[3]];
            match chsh_quantum_box(FRAC_PI_4, &angles) {
                Ok(b) => chsh_entropic(&b).unwrap_or(f64::NEG_INFINITY),
                Err(_) => f64::NEG_INFINITY,
            }
        };
        let pi = std::f64::consts::PI;
        let report = maximize(&mut obj, &[(-pi, pi); 4], 12, 20240817);
        assert!(
            (report.best_value - 0.2369).abs() < 5e-3,
            "expected ≈0.2369, got {}",
            report.best_value
        );
        // Re-evaluating the reported parameters reproduces the value.
        let again = obj(&report.best_params);
        assert!((again - report.best_value).abs() <= 1e-10);
        // Any entropic violation implies a correlator violation, but only up
        // to local outcome relabelings (entropies cannot see flips), so test
        // the maximum over the odd-sign orbit of the correlator expression.
        let angles = [
            report.best_params[0],
            report.best_params[1],
            report.best_params[2],
            report.best_params[3],
        ];
        let b = chsh_quantum_box(FRAC_PI_4, &angles).unwrap();
        assert!(correlator_orbit_max(&b) > 2.0);
    }

    /// Max over sign patterns with an odd number of minuses of
    /// Σ s_xy·E_xy, the relabeling orbit of the four-term correlator test.
    fn correlator_orbit_max(model: &MarginalModel) -> f64 {
        let mut e = [[0.0; 2]; 2];
        for x in 0..2 {
            for y in 0..2 {
                let ctx = [format!("A{x}"), format!("B{y}")].into_iter().collect();
                let t = model.table_f64(&ctx).unwrap();
                e[x][y] = t[0] - t[1] - t[2] + t[3];
            }
        }
        let mut best = f64::NEG_INFINITY;
        for mask in 0..16u32 {
            if mask.count_ones() % 2 == 0 {
                continue;
            }
            let mut v = 0.0;
            for (k, val) in [e[0][0], e[0][1], e[1][0], e[1][1]].iter().enumerate() {
                v += if mask & (1 << k) != 0 { -val } else { *val };
            }
            best = best.max(v);
        }
        best
    }

    #[test]
    fn all_zero_angles_give_a_noncontextual_box() {
        let b = chsh_quantum_box(0.7, &[0.0; 4]).unwrap();
        let (nc, cert) = is_noncontextual(&b).unwrap();
        assert!(nc);
        assert!(cert.is_some());
        assert!(chsh_entropic(&b).unwrap() <= 1e-12);
    }

    #[test]
    fn state_and_projector_validation_reject_bad_input() {
        assert!(matches!(chsh_quantum_box(0.0, &[0.0; 4]), Err(Error::Domain(_))));
        assert!(matches!(chsh_quantum_box(FRAC_PI_2, &[0.0; 4]), Err(Error::Domain(_))));
        let half = CMat::identity(2, 2).scale(0.5);
        assert!(Observable::from_projectors(vec![half.clone(), half]).is_err());
        let v = CVec::from_vec(vec![re(1.0), re(1.0)]);
        assert!(StateVector::new(v).is_err());
    }

    #[test]
    fn bloch_azimuth_pi_half_recovers_the_plane_observable() {
        for &t in &[0.0, 0.4, -1.3, 2.9] {
            let a = plane_observable(t);
            let b = bloch_observable(t, FRAC_PI_2);
            for k in 0..2 {
                assert!(max_abs(&(&a.projectors[k] - &b.projectors[k])) < 1e-15);
            }
        }
    }

    #[test]
    fn chained_with_two_settings_matches_the_two_setting_box() {
        let angles = [0.3, -0.9, 1.2, -0.2];
        let chained = chained_quantum_box(1.1, 2, &angles).unwrap();
        let square = chsh_quantum_box(1.1, &angles).unwrap();
        let as_cycle = chsh_to_cycle(&square).unwrap();
        for ctx in &chained.scenario.maximal_contexts {
            let a = chained.table_f64(ctx).unwrap();
            let b = as_cycle.table_f64(ctx).unwrap();
            for (x, y) in a.iter().zip(b.iter()) {
                assert!((x - y).abs() < 1e-12);
            }
        }
        assert!(
            (ncycle_entropic(&chained, 3).unwrap() - chsh_entropic(&square).unwrap()).abs()
                < 1e-12
        );
    }

    #[test]
    fn chained_boxes_validate_for_any_angle_spacing() {
        let k = 5;
        let angles: Vec<f64> =
            (0..2 * k).map(|j| j as f64 * std::f64::consts::PI / (2 * k) as f64).collect();
        let b = chained_quantum_box(1.0, k, &angles).unwrap();
        assert_eq!(b.scenario.maximal_contexts.len(), 10);
        b.entropy_vector().unwrap();
        assert!(matches!(chained_quantum_box(1.0, 1, &angles[..2]), Err(Error::Domain(_))));
        assert!(matches!(chained_quantum_box(1.0, 3, &angles[..4]), Err(Error::Shape(_))));
    }

    #[test]
    fn adjacent_cycle_vectors_are_orthonormal() {
        let v = klyachko_vectors(0.7, 0.3).unwrap();
        for i in 0..5 {
            let a = v[i];
            let b = v[(i + 1) % 5];
            let dot: f64 = (0..3).map(|k| a[k] * b[k]).sum();
            let na: f64 = (0..3).map(|k| a[k] * a[k]).sum();
            assert!(dot.abs() < 1e-12, "pair ({},{}) not orthogonal: {dot}", i + 1, i + 2);
            assert!((na - 1.0).abs() < 1e-12);
        }
        assert!(matches!(klyachko_vectors(0.0, 0.0), Err(Error::Domain(_))));
    }

    #[test]
    fn five_cycle_box_at_reported_optimum() {
        let b = klyachko_quantum_box(0.29736, 0.24131, 0.24131).unwrap();
        let v = ncycle_entropic(&b, 5).unwrap();
        assert!((v - 0.091091).abs() < 1e-4, "got {v}");
        let k5 = klyachko_k5(&b).unwrap();
        assert!((k5 - (-3.1967)).abs() < 1e-3, "got {k5}");
        assert!(k5 < -3.0, "pentagon correlator sum must dip below the classical bound");
        for ctx in &b.scenario.maximal_contexts {
            let t = b.table_f64(ctx).unwrap();
            assert_eq!(t[3], 0.0, "adjacent outcome (1,1) must be impossible");
        }
    }

    #[test]
    fn small_phi_tables_match_the_quadratic_forms() {
        let phi = 1e-3;
        let p2 = phi * phi;
        let b = klyachko_quantum_box(2.0 * phi, phi, phi).unwrap();
        let t = |name: &str| {
            let ctx = name.split(',').map(str::to_string).collect();
            b.table_f64(&ctx).unwrap()
        };
        // Tables are flat as (first outcome, second outcome), second fastest.
        let t15 = t("X1,X5");
        assert!((t15[1] - 4.0 * p2).abs() < 5e-9);
        assert!((t15[2] - 4.0 * p2).abs() < 5e-9);
        assert!((t15[0] - (1.0 - 8.0 * p2)).abs() < 5e-9);
        let t12 = t("X1,X2");
        assert!((t12[1] - (1.0 - 5.0 * p2)).abs() < 5e-9);
        assert!((t12[2] - 4.0 * p2).abs() < 5e-9);
        assert!((t12[0] - p2).abs() < 5e-9);
        let t23 = t("X2,X3");
        assert!((t23[1] - 4.5 * p2).abs() < 5e-9);
        assert!((t23[2] - (1.0 - 5.0 * p2)).abs() < 5e-9);
        assert!((t23[0] - 0.5 * p2).abs() < 5e-9);
    }

    #[test]
    fn small_phi_tables_have_the_mirror_symmetry() {
        let b = klyachko_quantum_box(0.1, 0.05, 0.05).unwrap();
        let name = |s: &str| s.split(',').map(str::to_string).collect();
        let t45 = b.table_f64(&name("X4,X5")).unwrap();
        let t12 = b.table_f64(&name("X1,X2")).unwrap();
        for a in 0..2 {
            for c in 0..2 {
                assert!((t45[a * 2 + c] - t12[c * 2 + a]).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn expansion_ratio_approaches_one_slowly_from_below() {
        let r3 = smallphi_expansion_check(1e-3).unwrap();
        assert!((r3 - 0.7823).abs() < 3e-3, "got {r3}");
        let r5 = smallphi_expansion_check(1e-5).unwrap();
        assert!((r5 - 0.8694).abs() < 3e-3, "got {r5}");
        assert!(r5 > r3);
        // Positive combination at moderate φ as well.
        assert!(smallphi_expansion_check(1e-2).unwrap() > 0.0);
        assert!(smallphi_expansion_check(0.2).is_err());
    }

    #[test]
    fn product_sources_give_a_classical_swap_box() {
        let b =
            bilocal_quantum_box(0.0, 0.0, 0.0, 0.0, &[0.3, -0.7], &[0.2, 1.1]).unwrap();
        for k in 1..=10 {
            let v = bilocal_row(&b, k).unwrap();
            assert!(v <= 1e-9, "row {k} evaluated to {v}");
        }
    }

    #[test]
    fn entangled_sources_satisfy_the_independence_condition() {
        let b = bilocal_quantum_box(
            FRAC_PI_4,
            0.0,
            FRAC_PI_4,
            0.0,
            &[0.0, -FRAC_PI_2],
            &[FRAC_PI_4, -FRAC_PI_4],
        )
        .unwrap();
        assert!(check_bilocal_marginal(&b).unwrap());
        assert!(binosig_residual(&b).unwrap() <= 1e-10);
        // The middle measurement has four outcomes.
        assert_eq!(b.scenario.outcome_cardinality["B"], 4);
        let full: std::collections::BTreeSet<String> =
            ["A0".into(), "B".into(), "C0".into()].into_iter().collect();
        assert_eq!(b.table_f64(&full).unwrap().len(), 16);
    }

    #[test]
    fn entropic_cycle_value_agrees_between_constructions() {
        // The 2k-cycle box at k=2 feeds the same evaluator as the reindexed
        // two-party box; sanity-check the distinguished-pair value too.
        let b = chained_quantum_box(FRAC_PI_4, 2, &TSIRELSON_ANGLES).unwrap();
        let square = chsh_quantum_box(FRAC_PI_4, &TSIRELSON_ANGLES).unwrap();
        assert!(
            (ncycle_entropic(&b, 3).unwrap() - chsh_entropic(&square).unwrap()).abs() < 1e-12
        );
        let ev = b.entropy_vector().unwrap();
        assert_eq!(ev.values.len(), boxworld::cycle_size(&b.scenario).map(|n| 2 * n).unwrap());
    }
}
