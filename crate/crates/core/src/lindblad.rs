//! Lindblad generators `dρ/dt = −i[H,ρ] + Σ_j γ_j 𝔏_{A_j}(ρ)`.

use ndarray::Array2;
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::fock::{annihilation, creation, two_photon_jump, FockOperator, FockSpace};
use crate::linalg;

#[derive(Debug, Clone)]
pub struct Jump {
    pub rate: f64,
    pub op: FockOperator,
}

/// Hamiltonian plus rated jump operators.
///
/// The non-Hermitian effective operator `K = iH + ½ Σ γ_j A_j†A_j` and the
/// jump adjoints are cached at construction; every generator evaluation and
/// every integrator step reuses them.
#[derive(Debug, Clone)]
pub struct LindbladModel {
    space: FockSpace,
    hamiltonian: FockOperator,
    jumps: Vec<Jump>,
    effective: Array2<C64>,
    jump_adjoints: Vec<Array2<C64>>,
}

impl LindbladModel {
    pub const HERMITIAN_TOL: f64 = 1e-12;

    pub fn new(space: FockSpace, hamiltonian: FockOperator, jumps: Vec<Jump>) -> Result<Self> {
        if hamiltonian.space() != space {
            return Err(Error::InvalidModel("Hamiltonian lives on another space".into()));
        }
        if !hamiltonian.is_hermitian(Self::HERMITIAN_TOL) {
            return Err(Error::InvalidModel("Hamiltonian is not Hermitian".into()));
        }
        for (k, jump) in jumps.iter().enumerate() {
            if !(jump.rate >= 0.0 && jump.rate.is_finite()) {
                return Err(Error::InvalidModel(format!(
                    "jump {k} has invalid rate {}",
                    jump.rate
                )));
            }
            if jump.op.space() != space {
                return Err(Error::InvalidModel(format!("jump {k} lives on another space")));
            }
        }

        let i = C64::new(0.0, 1.0);
        let mut effective = hamiltonian.matrix().mapv(|z| z * i);
        let mut jump_adjoints = Vec::with_capacity(jumps.len());
        for jump in &jumps {
            let adj = linalg::dagger(jump.op.matrix());
            let ata = adj.dot(jump.op.matrix());
            effective.scaled_add(C64::new(0.5 * jump.rate, 0.0), &ata);
            jump_adjoints.push(adj);
        }

        Ok(Self {
            space,
            hamiltonian,
            jumps,
            effective,
            jump_adjoints,
        })
    }

    pub fn space(&self) -> FockSpace {
        self.space
    }

    pub fn hamiltonian(&self) -> &FockOperator {
        &self.hamiltonian
    }

    pub fn jumps(&self) -> &[Jump] {
        &self.jumps
    }

    /// `K = iH + ½ Σ γ_j A_j†A_j`
    pub fn effective_operator(&self) -> &Array2<C64> {
        &self.effective
    }

    pub(crate) fn jump_adjoint(&self, k: usize) -> &Array2<C64> {
        &self.jump_adjoints[k]
    }

    /// Generator applied to a raw matrix: `−Kρ − ρK† + Σ γ_j A_j ρ A_j†`.
    pub(crate) fn apply(&self, rho: &Array2<C64>) -> Array2<C64> {
        let k_rho = self.effective.dot(rho);
        let mut out = -&k_rho;
        out -= &linalg::dagger(&self.effective.dot(&linalg::dagger(rho)));
        for (jump, adj) in self.jumps.iter().zip(&self.jump_adjoints) {
            if jump.rate == 0.0 {
                continue;
            }
            let sandwich = jump.op.matrix().dot(rho).dot(adj);
            out.scaled_add(C64::new(jump.rate, 0.0), &sandwich);
        }
        out
    }

    /// Heisenberg-picture generator `i[H,X] + Σ γ_j 𝔏*_{A_j}(X)`.
    pub(crate) fn apply_adjoint(&self, x: &Array2<C64>) -> Array2<C64> {
        let k_dag = linalg::dagger(&self.effective);
        let mut out = -(k_dag.dot(x));
        out -= &x.dot(&self.effective);
        for (jump, adj) in self.jumps.iter().zip(&self.jump_adjoints) {
            if jump.rate == 0.0 {
                continue;
            }
            let sandwich = adj.dot(x).dot(jump.op.matrix());
            out.scaled_add(C64::new(jump.rate, 0.0), &sandwich);
        }
        out
    }

    /// `dρ/dt`. When `rho` is Hermitian the result is Hermitized to remove
    /// roundoff skew.
    pub fn rhs(&self, rho: &FockOperator) -> Result<FockOperator> {
        self.check_space(rho)?;
        let mut out = self.apply(rho.matrix());
        if rho.is_hermitian(Self::HERMITIAN_TOL) {
            linalg::hermitize(&mut out);
        }
        Ok(FockOperator::from_parts(self.space, out))
    }

    /// Adjoint generator acting on an observable.
    pub fn adjoint_rhs(&self, x: &FockOperator) -> Result<FockOperator> {
        self.check_space(x)?;
        let mut out = self.apply_adjoint(x.matrix());
        if x.is_hermitian(Self::HERMITIAN_TOL) {
            linalg::hermitize(&mut out);
        }
        Ok(FockOperator::from_parts(self.space, out))
    }

    fn check_space(&self, op: &FockOperator) -> Result<()> {
        if op.space() != self.space {
            let n = op.space().n_max();
            return Err(Error::ShapeMismatch {
                expected: self.space.n_max(),
                rows: n,
                cols: n,
            });
        }
        Ok(())
    }

    /// Upper bound on the spectral radius of `K`, `‖H‖ + ½ Σ γ_j ‖A_j‖²`
    /// (2-norms), used by the step-size guard.
    pub fn stiffness_bound(&self) -> Result<f64> {
        let h = spectral_norm(self.hamiltonian.matrix())?;
        let mut bound = h;
        for jump in &self.jumps {
            let norm = spectral_norm(jump.op.matrix())?;
            bound += 0.5 * jump.rate * norm * norm;
        }
        Ok(bound)
    }
}

fn spectral_norm(m: &Array2<C64>) -> Result<f64> {
    // largest eigenvalue of M†M
    let gram = linalg::dagger(m).dot(m);
    let vals = linalg::eigvalsh(&gram)?;
    Ok(vals[vals.len() - 1].max(0.0).sqrt())
}

fn check_pair(a: &FockOperator, b: &FockOperator) -> Result<()> {
    if a.space() != b.space() {
        let n = b.space().n_max();
        return Err(Error::ShapeMismatch {
            expected: a.space().n_max(),
            rows: n,
            cols: n,
        });
    }
    Ok(())
}

/// `𝔏_A(ρ) = AρA† − (A†Aρ + ρA†A)/2`
pub fn dissipator(a: &FockOperator, rho: &FockOperator) -> Result<FockOperator> {
    check_pair(a, rho)?;
    let ad = a.dagger();
    let ata = ad.dot(a);
    let anti = ata.dot(rho).add(&rho.dot(&ata));
    Ok(a.dot(rho).dot(&ad).sub(&anti.scale(C64::new(0.5, 0.0))))
}

/// `𝔏*_A(X) = A†XA − (A†AX + XA†A)/2`
pub fn adjoint_dissipator(a: &FockOperator, x: &FockOperator) -> Result<FockOperator> {
    check_pair(a, x)?;
    let ad = a.dagger();
    let ata = ad.dot(a);
    let anti = ata.dot(x).add(&x.dot(&ata));
    Ok(ad.dot(x).dot(a).sub(&anti.scale(C64::new(0.5, 0.0))))
}

pub fn rhs(model: &LindbladModel, rho: &FockOperator) -> Result<FockOperator> {
    model.rhs(rho)
}

/// Drive amplitude `u` matching a cat amplitude: `α² = 2u/κ`.
pub fn drive_from_alpha(alpha: f64, kappa: f64) -> f64 {
    0.5 * kappa * alpha * alpha
}

pub fn alpha_from_drive(u: f64, kappa: f64) -> f64 {
    (2.0 * u / kappa).sqrt()
}

/// `dρ/dt = κ𝔏_L(ρ) + ε𝔏_a(ρ)` with `L = a² − α²`.
pub fn cat_model(space: FockSpace, alpha: f64, kappa: f64, epsilon: f64) -> Result<LindbladModel> {
    LindbladModel::new(
        space,
        FockOperator::zeros(space),
        vec![
            Jump {
                rate: kappa,
                op: two_photon_jump(space, alpha),
            },
            Jump {
                rate: epsilon,
                op: annihilation(space),
            },
        ],
    )
}

/// `dρ/dt = u[(a†)² − a², ρ] + κ𝔏_{a²}(ρ) + ε𝔏_a(ρ)`, with the drive written
/// as `−i[H,ρ]` for `H = iu((a†)² − a²)`.
pub fn drive_form_model(space: FockSpace, u: f64, kappa: f64, epsilon: f64) -> Result<LindbladModel> {
    let a = annihilation(space);
    let ad = creation(space);
    let a2 = a.dot(&a);
    let ad2 = ad.dot(&ad);
    let hamiltonian = ad2.sub(&a2).scale(C64::new(0.0, u));
    LindbladModel::new(
        space,
        hamiltonian,
        vec![
            Jump { rate: kappa, op: a2 },
            Jump {
                rate: epsilon,
                op: a,
            },
        ],
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{cat_state, identity_op, parity_op, CatSign, DensityMatrix};
    use crate::random::{random_density, random_hermitian, rng};

    fn space(n: usize) -> FockSpace {
        FockSpace::new(n).unwrap()
    }

    #[test]
    fn loss_dissipator_on_low_states() {
        let s = space(6);
        let a = annihilation(s);
        let vac = DensityMatrix::vacuum(s).to_operator();
        assert_eq!(dissipator(&a, &vac).unwrap().frobenius_norm(), 0.0);

        let one = DensityMatrix::fock(s, 1).unwrap().to_operator();
        let out = dissipator(&a, &one).unwrap();
        let expected = vac.sub(&one);
        assert!(out.sub(&expected).frobenius_norm() < 1e-15);
    }

    #[test]
    fn dissipator_is_trace_free() {
        let s = space(10);
        let mut r = rng(3);
        for _ in 0..10 {
            let a = random_hermitian(s, &mut r).add(&random_hermitian(s, &mut r).scale(C64::new(0.0, 1.0)));
            let rho = random_density(s, 10, &mut r).to_operator();
            assert!(dissipator(&a, &rho).unwrap().trace().norm() < 1e-12);
        }
    }

    #[test]
    fn adjoint_kernel_contains_identity_and_parity() {
        let s = space(40);
        let l = two_photon_jump(s, 1.0);
        let id = adjoint_dissipator(&l, &identity_op(s)).unwrap();
        let par = adjoint_dissipator(&l, &parity_op(s)).unwrap();
        assert!(id.block_norm(38) < 1e-12);
        assert!(par.block_norm(38) < 1e-12);
    }

    #[test]
    fn adjoint_duality() {
        let s = space(12);
        let mut r = rng(5);
        for _ in 0..10 {
            let a = random_hermitian(s, &mut r).add(&random_hermitian(s, &mut r).scale(C64::new(0.0, 1.0)));
            let rho = random_hermitian(s, &mut r);
            let x = random_hermitian(s, &mut r);
            let lhs = dissipator(&a, &rho).unwrap().dot(&x).trace();
            let rhs = rho.dot(&adjoint_dissipator(&a, &x).unwrap()).trace();
            assert!((lhs - rhs).norm() < 1e-10 * (1.0 + lhs.norm()));
        }
    }

    #[test]
    fn rejects_mismatched_shapes() {
        let a = annihilation(space(4));
        let rho = DensityMatrix::vacuum(space(5)).to_operator();
        assert!(matches!(dissipator(&a, &rho), Err(Error::ShapeMismatch { .. })));
        assert!(matches!(adjoint_dissipator(&a, &rho), Err(Error::ShapeMismatch { .. })));
    }

    #[test]
    fn cat_subspace_is_stationary() {
        let s = space(40);
        let model = cat_model(s, 1.0, 1.0, 0.0).unwrap();
        let plus = cat_state(s, 1.0, CatSign::Plus).unwrap();
        let minus = cat_state(s, 1.0, CatSign::Minus).unwrap();
        let mixed = plus
            .outer(&plus)
            .scale(C64::new(0.3, 0.0))
            .add(&minus.outer(&minus).scale(C64::new(0.7, 0.0)))
            .add(&plus.outer(&minus).scale(C64::new(0.1, 0.2)))
            .add(&minus.outer(&plus).scale(C64::new(0.1, -0.2)));
        let out = model.rhs(&mixed).unwrap();
        assert!(out.frobenius_norm() <= 1e-9);
    }

    #[test]
    fn empty_model_is_static() {
        let s = space(5);
        let model = LindbladModel::new(s, FockOperator::zeros(s), vec![]).unwrap();
        let rho = random_density(s, 5, &mut rng(1)).to_operator();
        assert_eq!(model.rhs(&rho).unwrap().frobenius_norm(), 0.0);
    }

    #[test]
    fn rhs_trace_free_and_hermitian() {
        let s = space(20);
        let model = cat_model(s, 1.0, 1.0, 0.05).unwrap();
        let mut r = rng(9);
        for _ in 0..5 {
            let rho = random_density(s, 20, &mut r).to_operator();
            let out = model.rhs(&rho).unwrap();
            assert!(out.trace().norm() < 1e-11);
            assert!(out.is_hermitian(0.0));
        }
    }

    #[test]
    fn drive_form_matches_l_form() {
        let s = space(30);
        let mut r = rng(11);
        for alpha in [0.7, 1.0, 1.5] {
            let kappa = 1.3;
            let u = drive_from_alpha(alpha, kappa);
            let l_form = cat_model(s, alpha, kappa, 0.02).unwrap();
            let d_form = drive_form_model(s, u, kappa, 0.02).unwrap();
            for _ in 0..5 {
                let rho = random_density(s, 30, &mut r).to_operator();
                let diff = l_form.rhs(&rho).unwrap().sub(&d_form.rhs(&rho).unwrap());
                assert!(diff.frobenius_norm() < 1e-9, "alpha {alpha}");
            }
        }
    }

    #[test]
    fn paper_parameters_give_unit_amplitude() {
        assert!((alpha_from_drive(0.5, 1.0) - 1.0).abs() < 1e-15);
        // the linear relation α = 2u/κ agrees at this point only
        assert!((2.0 * 0.5 / 1.0_f64 - alpha_from_drive(0.5, 1.0)).abs() < 1e-15);
    }

    #[test]
    fn vanishing_drive_reduces_to_pair_loss() {
        let s = space(10);
        let a = annihilation(s);
        let a2 = a.dot(&a);
        let rho = random_density(s, 10, &mut rng(2)).to_operator();
        let expected = dissipator(&a2, &rho).unwrap();
        let l = cat_model(s, 0.0, 1.0, 0.0).unwrap().rhs(&rho).unwrap();
        let d = drive_form_model(s, 0.0, 1.0, 0.0).unwrap().rhs(&rho).unwrap();
        assert!(l.sub(&expected).frobenius_norm() < 1e-13);
        assert!(d.sub(&expected).frobenius_norm() < 1e-13);
    }

    #[test]
    fn rejects_negative_rate_and_non_hermitian_h() {
        let s = space(4);
        let bad_rate = LindbladModel::new(
            s,
            FockOperator::zeros(s),
            vec![Jump {
                rate: -1.0,
                op: annihilation(s),
            }],
        );
        assert!(matches!(bad_rate, Err(Error::InvalidModel(_))));
        let bad_h = LindbladModel::new(s, annihilation(s), vec![]);
        assert!(matches!(bad_h, Err(Error::InvalidModel(_))));
    }

    #[test]
    fn adjoint_rhs_matches_trace_duality() {
        let s = space(12);
        let model = drive_form_model(s, 0.4, 1.0, 0.1).unwrap();
        let mut r = rng(4);
        let rho = random_density(s, 12, &mut r).to_operator();
        let x = random_hermitian(s, &mut r);
        let lhs = model.rhs(&rho).unwrap().dot(&x).trace();
        let rhs = rho.dot(&model.adjoint_rhs(&x).unwrap()).trace();
        assert!((lhs - rhs).norm() < 1e-10);
    }
}
