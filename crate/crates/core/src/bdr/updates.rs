//! Single-step posterior updates. Each function refreshes one factor of the
//! variational posterior from the current values of the others.

use crate::numerics::{cholesky_factor, spd_inverse, spd_solve, sym_eig, Matrix, SymEig};
use crate::scalar::Scalar;

use super::{BdrConfig, BdrError, BdrState, PrecisionMeans, PriorMode};

/// Data-dependent quantities shared by every iteration of a fit.
#[derive(Debug, Clone)]
pub struct BdrWorkspace<T> {
    x: Matrix<T>,
    xxt: Matrix<T>,
    /// Eigendecomposition of `XXᵀ`, present in ARD mode.
    xxt_eig: Option<SymEig<T>>,
}

impl<T: Scalar> BdrWorkspace<T> {
    /// Caches `XXᵀ` (and its eigendecomposition for the ARD prior) for the
    /// data the fit runs on. `x` is used as given; centering happens before.
    pub fn new(x: Matrix<T>, mode: PriorMode) -> Result<Self, BdrError> {
        if !x.is_finite() {
            return Err(BdrError::NumericalFailure("data contains non-finite values".into()));
        }
        let xxt = x.gram_outer();
        let xxt_eig = match mode {
            PriorMode::Ard => Some(sym_eig(&xxt).map_err(|e| BdrError::numerical("eigendecomposition of XXᵀ", e))?),
            PriorMode::ElementWise => None,
        };
        Ok(Self { x, xxt, xxt_eig })
    }

    pub fn x(&self) -> &Matrix<T> {
        &self.x
    }

    pub fn xxt(&self) -> &Matrix<T> {
        &self.xxt
    }
}

fn check_dims<T: Scalar>(state: &BdrState<T>, x: &Matrix<T>) -> Result<(), BdrError> {
    let (d, r) = state.dims();
    if x.rows() != d || state.z_mu.rows() != r || state.z_mu.cols() != x.cols() {
        return Err(BdrError::DimMismatch {
            expected: format!("X with {d} rows and Z of {r}x{}", x.cols()),
            got: format!(
                "X {}x{}, Z {}x{}",
                x.rows(),
                x.cols(),
                state.z_mu.rows(),
                state.z_mu.cols()
            ),
        });
    }
    Ok(())
}

/// Latent posterior: `Σ_z = (Q_μᵀQ_μ/σ² + I)⁻¹`, `z_n = Σ_z Q_μᵀ x_n / σ²`.
pub fn update_latents<T: Scalar>(state: &mut BdrState<T>, x: &Matrix<T>, cfg: &BdrConfig) -> Result<(), BdrError> {
    let (d, r) = state.dims();
    if x.rows() != d {
        return Err(BdrError::DimMismatch {
            expected: format!("{d} rows"),
            got: format!("{} rows", x.rows()),
        });
    }
    let inv_s2 = T::one() / T::of(cfg.sigma_z_sq);
    let mut precision = state.q_mu.t_matmul(&state.q_mu).expect("Q_μᵀQ_μ").scale(inv_s2);
    precision.add_diag(T::one());
    precision.symmetrize();
    let factor = cholesky_factor(&precision).map_err(|e| BdrError::numerical("latent covariance", e))?;
    let sigma_z = spd_inverse(&factor);
    // Σ_z Q_μᵀ X / σ² computed as a solve against the same factor.
    let rhs = state.q_mu.t_matmul(x).expect("Q_μᵀX").scale(inv_s2);
    let z_mu = spd_solve(&factor, &rhs).expect("dimensions checked");
    debug_assert_eq!(z_mu.shape(), (r, x.cols()));
    state.sigma_z = sigma_z;
    state.z_mu = z_mu;
    Ok(())
}

/// Element-wise gamma posterior: shape `α + 1/2`, scale
/// `(1/β + q_{fs}²/2 + Σ_{q_s}[f,f]/2)⁻¹`; stores the mean shape·scale.
pub fn update_precision_elementwise<T: Scalar>(state: &mut BdrState<T>, cfg: &BdrConfig) -> Result<(), BdrError> {
    let (d, r) = state.dims();
    let half = T::of(0.5);
    let shape = T::of(cfg.alpha_phi) + half;
    let inv_beta = T::one() / T::of(cfg.beta_phi);
    let phi = Matrix::from_fn(d, r, |f, s| {
        let q = state.q_mu[(f, s)];
        let var = state.sigma_q[s][(f, f)];
        let scale = T::one() / (inv_beta + q * q * half + var * half);
        shape * scale
    });
    state.phi = PrecisionMeans::ElementWise(phi);
    Ok(())
}

/// ARD gamma posterior: shape `α + D/2`, scale
/// `(1/β + (q_sᵀq_s + Tr Σ_{q_s})/2)⁻¹`; stores the mean shape·scale.
pub fn update_precision_ard<T: Scalar>(state: &mut BdrState<T>, cfg: &BdrConfig) -> Result<(), BdrError> {
    let (d, r) = state.dims();
    let half = T::of(0.5);
    let shape = T::of(cfg.alpha_phi) + T::from_usize(d).unwrap() * half;
    let inv_beta = T::one() / T::of(cfg.beta_phi);
    let phi = (0..r)
        .map(|s| {
            let qq: T = (0..d).map(|f| state.q_mu[(f, s)] * state.q_mu[(f, s)]).sum();
            let scale = T::one() / (inv_beta + (qq + state.sigma_q[s].trace()) * half);
            shape * scale
        })
        .collect();
    state.phi = PrecisionMeans::Ard(phi);
    Ok(())
}

/// Dispatches on the configured prior.
pub fn update_precision<T: Scalar>(state: &mut BdrState<T>, cfg: &BdrConfig) -> Result<(), BdrError> {
    match cfg.prior_mode {
        PriorMode::ElementWise => update_precision_elementwise(state, cfg),
        PriorMode::Ard => update_precision_ard(state, cfg),
    }
}

/// Projection posterior, one Gaussian per column of `Q`:
/// `Σ_{q_s} = (P_s + XXᵀ/σ²)⁻¹` with `P_s = diag(φ_s)` (element-wise) or
/// `φ_s I` (ARD), and mean `Σ_{q_s} X z̃ˢ / σ²` with `z̃ˢ` row `s` of `Z`.
///
/// In ARD mode the inverse reuses the cached eigendecomposition
/// `XXᵀ = V Λ Vᵀ`, so `Σ_{q_s} = V diag(1/(φ_s + λ_i/σ²)) Vᵀ`.
pub fn update_projection<T: Scalar>(state: &mut BdrState<T>, ws: &BdrWorkspace<T>, cfg: &BdrConfig) -> Result<(), BdrError> {
    check_dims(state, &ws.x)?;
    let (d, r) = state.dims();
    let inv_s2 = T::one() / T::of(cfg.sigma_z_sq);
    // Column s of X Z̃ᵀ is X z̃ˢ.
    let xz = ws
        .x
        .matmul(&state.z_mu.transpose())
        .expect("X Z̃ᵀ")
        .scale(inv_s2);

    let mut q_mu = Matrix::zeros(d, r);
    let mut sigma_q = Vec::with_capacity(r);
    match (&state.phi, cfg.prior_mode) {
        (PrecisionMeans::ElementWise(phi), PriorMode::ElementWise) => {
            for s in 0..r {
                let mut precision = ws.xxt.scale(inv_s2);
                for f in 0..d {
                    precision[(f, f)] += phi[(f, s)];
                }
                let factor = cholesky_factor(&precision).map_err(|e| BdrError::numerical("projection covariance", e))?;
                let mean = spd_solve(&factor, &Matrix::column_vector(&xz.column(s))).expect("dims");
                q_mu.set_column(s, mean.as_slice());
                sigma_q.push(spd_inverse(&factor));
            }
        }
        (PrecisionMeans::Ard(phi), PriorMode::Ard) => {
            let eig = ws.xxt_eig.as_ref().expect("ARD workspace caches the eigendecomposition");
            let v = &eig.vectors;
            for s in 0..r {
                if !(phi[s] > T::zero()) {
                    return Err(BdrError::NumericalFailure(format!("non-positive precision {} for column {s}", phi[s])));
                }
                let inv: Vec<T> = eig
                    .values
                    .iter()
                    .map(|&l| T::one() / (phi[s] + l.max(T::zero()) * inv_s2))
                    .collect();
                let b = xz.column(s);
                let mut w: Vec<T> = (0..d).map(|i| (0..d).map(|k| v[(k, i)] * b[k]).sum::<T>()).collect();
                for (wi, &c) in w.iter_mut().zip(&inv) {
                    *wi *= c;
                }
                let mean: Vec<T> = (0..d).map(|k| (0..d).map(|i| v[(k, i)] * w[i]).sum()).collect();
                q_mu.set_column(s, &mean);
                let mut cov = Matrix::zeros(d, d);
                for a in 0..d {
                    for b in 0..=a {
                        let val: T = (0..d).map(|i| v[(a, i)] * inv[i] * v[(b, i)]).sum();
                        cov[(a, b)] = val;
                        cov[(b, a)] = val;
                    }
                }
                sigma_q.push(cov);
            }
        }
        _ => {
            return Err(BdrError::BadConfig("precision layout does not match the configured prior".into()));
        }
    }
    if !q_mu.is_finite() {
        return Err(BdrError::NumericalFailure("projection mean became non-finite".into()));
    }
    state.q_mu = q_mu;
    state.sigma_q = sigma_q;
    Ok(())
}
