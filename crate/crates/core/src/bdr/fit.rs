use crate::numerics::{gaussian_matrix, sym_eig, thin_qr, LinalgError, Matrix, SeededRng};
use crate::scalar::Scalar;

use super::updates::{update_latents, update_precision, update_projection, BdrWorkspace};
use super::{BdrConfig, BdrError, BdrState, PrecisionMeans, PriorMode};

/// Summary of a completed CAVI run.
#[derive(Debug, Clone, PartialEq)]
pub struct FitReport<T> {
    pub iterations_run: usize,
    pub converged: bool,
    pub final_delta: T,
    /// Relative Frobenius change of `Q_μ` after each iteration.
    pub delta_history: Vec<T>,
    pub phi_final: PrecisionMeans<T>,
    /// ARD only: squared norms of the canonical components, descending.
    pub canonical_energy: Vec<T>,
    /// ARD only: relative precision `max energy / energy` per canonical
    /// component; the quantity compared against the prune threshold.
    pub relative_precision: Vec<T>,
}

/// A fitted, frozen projector.
#[derive(Debug, Clone, PartialEq)]
pub struct BdrModel<T> {
    /// D×R_eff, orthonormal columns.
    pub q_orth: Matrix<T>,
    /// R_eff×R_eff upper-triangular factor with `basis = q_orth · r_upper`.
    pub r_upper: Matrix<T>,
    /// Training column means (zeros when centering is off).
    pub center: Vec<T>,
    /// Indices of the components kept. In ARD mode these index the canonical
    /// components, ordered by decreasing norm.
    pub retained: Vec<usize>,
    pub config: BdrConfig,
    pub report: FitReport<T>,
}

impl<T: Scalar> BdrModel<T> {
    pub fn input_dim(&self) -> usize {
        self.q_orth.rows()
    }

    pub fn n_components(&self) -> usize {
        self.q_orth.cols()
    }
}

/// Initial posterior: `Q_μ ~ N(0, (1/√D)²)` from the configured seed,
/// `Σ_{q_s} = I`, precision means `α·β`, then one latent update.
pub fn bdr_init<T: Scalar>(x: &Matrix<T>, cfg: &BdrConfig) -> Result<BdrState<T>, BdrError> {
    let (d, n) = x.shape();
    cfg.validate_for(d, n)?;
    if !x.is_finite() {
        return Err(BdrError::BadShape("data contains non-finite values".into()));
    }
    let r = cfg.r;
    let mut rng = SeededRng::new(cfg.seed);
    let q_mu = gaussian_matrix(&mut rng, d, r, 0.0, 1.0 / (d as f64).sqrt());
    let prior_mean = T::of(cfg.alpha_phi * cfg.beta_phi);
    let phi = match cfg.prior_mode {
        PriorMode::ElementWise => PrecisionMeans::ElementWise(Matrix::filled(d, r, prior_mean)),
        PriorMode::Ard => PrecisionMeans::Ard(vec![prior_mean; r]),
    };
    let mut state = BdrState {
        q_mu,
        sigma_q: vec![Matrix::identity(d); r],
        phi,
        z_mu: Matrix::zeros(r, n),
        sigma_z: Matrix::identity(r),
        iteration: 0,
        last_delta: T::infinity(),
    };
    update_latents(&mut state, x, cfg)?;
    Ok(state)
}

fn relative_change<T: Scalar>(old: &Matrix<T>, new: &Matrix<T>) -> T {
    let num = new.sub(old).expect("same shape").frobenius();
    let den = old.frobenius();
    if den > T::zero() {
        num / den
    } else if num == T::zero() {
        T::zero()
    } else {
        T::infinity()
    }
}

/// An in-progress fit: owns the centered data, the cached workspace and
/// the posterior state.
#[derive(Debug, Clone)]
pub struct BdrRun<T> {
    pub config: BdrConfig,
    pub center: Vec<T>,
    pub workspace: BdrWorkspace<T>,
    pub state: BdrState<T>,
    pub delta_history: Vec<T>,
    pub converged: bool,
}

impl<T: Scalar> BdrRun<T> {
    pub fn new(x: &Matrix<T>, cfg: &BdrConfig) -> Result<Self, BdrError> {
        let (d, n) = x.shape();
        cfg.validate_for(d, n)?;
        let center = if cfg.center_data { x.row_means() } else { vec![T::zero(); d] };
        let xc = if cfg.center_data { x.sub_row_offsets(&center) } else { x.clone() };
        let state = bdr_init(&xc, cfg)?;
        let workspace = BdrWorkspace::new(xc, cfg.prior_mode)?;
        Ok(Self {
            config: cfg.clone(),
            center,
            workspace,
            state,
            delta_history: Vec::new(),
            converged: false,
        })
    }

    /// One full cycle Z → Φ → Q. Returns the relative change of `Q_μ`.
    pub fn step(&mut self) -> Result<T, BdrError> {
        let cfg = &self.config;
        update_latents(&mut self.state, self.workspace.x(), cfg)?;
        update_precision(&mut self.state, cfg)?;
        let previous = self.state.q_mu.clone();
        update_projection(&mut self.state, &self.workspace, cfg)?;
        if !self.state.phi.all_positive() {
            return Err(BdrError::NumericalFailure("precision mean left the positive reals".into()));
        }
        let delta = relative_change(&previous, &self.state.q_mu);
        self.state.iteration += 1;
        self.state.last_delta = delta;
        Ok(delta)
    }

    /// Iterates until the relative change drops below `tol` or the cap is hit.
    pub fn run(&mut self) -> Result<(), BdrError> {
        let tol = T::of(self.config.tol);
        while self.state.iteration < self.config.max_iter {
            let delta = self.step()?;
            self.delta_history.push(delta);
            if delta < tol {
                self.converged = true;
                break;
            }
        }
        Ok(())
    }

    /// Orthonormalizes (and in ARD mode prunes) the current posterior mean.
    pub fn finish(&self) -> Result<BdrModel<T>, BdrError> {
        let (_, r) = self.state.dims();
        let (basis, retained, energy, rel) = match self.config.prior_mode {
            PriorMode::ElementWise => (self.state.q_mu.clone(), (0..r).collect(), Vec::new(), Vec::new()),
            PriorMode::Ard => {
                let canonical = canonical_form(&self.state.q_mu)?;
                let energy: Vec<T> = (0..r)
                    .map(|s| canonical.column(s).iter().map(|&v| v * v).sum())
                    .collect();
                let top = energy.iter().copied().fold(T::zero(), T::max);
                let rel: Vec<T> = energy
                    .iter()
                    .map(|&e| if e > T::zero() { top / e } else { T::infinity() })
                    .collect();
                let retained = ard_prune(&rel, &energy, T::of(self.config.prune_threshold));
                (canonical.select_columns(&retained), retained, energy, rel)
            }
        };
        let (q_orth, r_upper) = orthonormalize(&basis)?;
        Ok(BdrModel {
            q_orth,
            r_upper,
            center: self.center.clone(),
            retained,
            config: self.config.clone(),
            report: FitReport {
                iterations_run: self.delta_history.len(),
                converged: self.converged,
                final_delta: self.delta_history.last().copied().unwrap_or(T::infinity()),
                delta_history: self.delta_history.clone(),
                phi_final: self.state.phi.clone(),
                canonical_energy: energy,
                relative_precision: rel,
            },
        })
    }
}

/// Rotates `Q_μ` by the eigenvectors of `Q_μᵀQ_μ` so its columns become
/// mutually orthogonal, ordered by decreasing norm, each with its
/// largest-magnitude entry positive. The column span is unchanged.
fn canonical_form<T: Scalar>(q_mu: &Matrix<T>) -> Result<Matrix<T>, BdrError> {
    let mut gram = q_mu.t_matmul(q_mu).expect("Q_μᵀQ_μ");
    gram.symmetrize();
    let eig = sym_eig(&gram).map_err(|e| BdrError::numerical("canonical rotation", e))?;
    let r = gram.rows();
    let order: Vec<usize> = (0..r).rev().collect();
    let rot = eig.vectors.select_columns(&order);
    let mut canonical = q_mu.matmul(&rot).expect("Q_μ V");
    for s in 0..r {
        let col = canonical.column(s);
        let mut pivot = T::zero();
        for &v in &col {
            if v.abs() > pivot.abs() {
                pivot = v;
            }
        }
        if pivot < T::zero() {
            let flipped: Vec<T> = col.iter().map(|&v| -v).collect();
            canonical.set_column(s, &flipped);
        }
    }
    Ok(canonical)
}

/// Keeps component `s` iff `precision[s] < threshold`. If nothing survives,
/// the component with the largest `column_norms` entry is kept.
pub fn ard_prune<T: Scalar>(precision: &[T], column_norms: &[T], threshold: T) -> Vec<usize> {
    let kept: Vec<usize> = precision
        .iter()
        .enumerate()
        .filter(|(_, &p)| p < threshold)
        .map(|(i, _)| i)
        .collect();
    if !kept.is_empty() {
        return kept;
    }
    let mut best = 0;
    for (i, &n) in column_norms.iter().enumerate() {
        if n > column_norms[best] {
            best = i;
        }
    }
    vec![best]
}

/// Thin QR of the projection mean: `q_mu = q_orth · r_upper`.
pub fn orthonormalize<T: Scalar>(q_mu: &Matrix<T>) -> Result<(Matrix<T>, Matrix<T>), BdrError> {
    match thin_qr(q_mu) {
        Ok(qr) => Ok((qr.q, qr.r)),
        Err(LinalgError::RankDeficient { column }) => Err(BdrError::RankDeficient { column }),
        Err(e) => Err(BdrError::numerical("orthonormalization", e)),
    }
}

/// Full fit: center, iterate, orthonormalize (and prune in ARD mode).
pub fn bdr_fit<T: Scalar>(x: &Matrix<T>, cfg: &BdrConfig) -> Result<BdrModel<T>, BdrError> {
    let mut run = BdrRun::new(x, cfg)?;
    run.run()?;
    run.finish()
}

/// Projects the columns of `x` (D×M) onto the fitted basis, giving M×R_eff.
pub fn bdr_project<T: Scalar>(model: &BdrModel<T>, x: &Matrix<T>) -> Result<Matrix<T>, BdrError> {
    if x.rows() != model.input_dim() {
        return Err(BdrError::DimMismatch {
            expected: format!("{} rows", model.input_dim()),
            got: format!("{} rows", x.rows()),
        });
    }
    let xc = x.sub_row_offsets(&model.center);
    Ok(xc.t_matmul(&model.q_orth).expect("dims checked"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn init_uses_prior_means_and_is_seeded() {
        let x = gaussian_matrix::<f64>(&mut SeededRng::new(1), 5, 8, 0.0, 1.0);
        let cfg = BdrConfig {
            r: 2,
            prior_mode: PriorMode::ElementWise,
            ..BdrConfig::default()
        };
        let a = bdr_init(&x, &cfg).unwrap();
        let b = bdr_init(&x, &cfg).unwrap();
        assert_eq!(a.q_mu, b.q_mu);
        assert!(a.phi.values().iter().all(|&v| v == 1.0));
        assert_eq!(a.sigma_q.len(), 2);
    }

    #[test]
    fn init_rejects_bad_input() {
        let x = Matrix::<f64>::zeros(3, 1);
        assert!(matches!(bdr_init(&x, &BdrConfig::default()), Err(BdrError::BadShape(_))));
        let x = Matrix::<f64>::zeros(3, 5);
        let cfg = BdrConfig {
            r: 4,
            ..BdrConfig::default()
        };
        assert!(matches!(bdr_init(&x, &cfg), Err(BdrError::BadConfig(_))));
        let cfg = BdrConfig {
            r: 0,
            ..BdrConfig::default()
        };
        assert!(matches!(bdr_init(&x, &cfg), Err(BdrError::BadConfig(_))));
    }

    #[test]
    fn prune_examples() {
        assert_eq!(ard_prune(&[1.0, 1.0, 1.0], &[1.0, 1.0, 1.0], 1e4), vec![0, 1, 2]);
        assert_eq!(ard_prune(&[1.0, 1e6], &[1.0, 1e-3], 1e4), vec![0]);
        assert_eq!(ard_prune(&[2e4, 3e4], &[0.1, 0.5], 1e4), vec![1]);
    }

    #[test]
    fn orthonormalize_scaling() {
        let q = Matrix::<f64>::from_fn(4, 2, |i, j| if i == j { 2.0 } else { 0.0 });
        let (qo, r) = orthonormalize(&q).unwrap();
        assert_eq!(r, Matrix::identity(2).scale(2.0));
        assert_eq!(qo, q.scale(0.5));
    }

    #[test]
    fn zero_data_is_rank_deficient() {
        let x = Matrix::<f64>::zeros(6, 10);
        for mode in [PriorMode::Ard, PriorMode::ElementWise] {
            let cfg = BdrConfig {
                r: 2,
                prior_mode: mode,
                ..BdrConfig::default()
            };
            assert!(matches!(bdr_fit(&x, &cfg), Err(BdrError::RankDeficient { .. })));
        }
    }

    #[test]
    fn projection_selects_coordinates() {
        let x = gaussian_matrix::<f64>(&mut SeededRng::new(2), 4, 6, 0.0, 1.0);
        let model = BdrModel {
            q_orth: Matrix::from_fn(4, 2, |i, j| if i == j { 1.0 } else { 0.0 }),
            r_upper: Matrix::identity(2),
            center: vec![0.0; 4],
            retained: vec![0, 1],
            config: BdrConfig::default(),
            report: FitReport {
                iterations_run: 0,
                converged: true,
                final_delta: 0.0,
                delta_history: vec![],
                phi_final: PrecisionMeans::Ard(vec![1.0, 1.0]),
                canonical_energy: vec![],
                relative_precision: vec![],
            },
        };
        let u = bdr_project(&model, &x).unwrap();
        for m in 0..6 {
            for s in 0..2 {
                assert_eq!(u[(m, s)], x[(s, m)]);
            }
        }
        let centered = BdrModel {
            center: vec![1.0, 2.0, 3.0, 4.0],
            ..model.clone()
        };
        let rep = Matrix::from_fn(4, 3, |i, _| (i + 1) as f64);
        assert!(bdr_project(&centered, &rep).unwrap().as_slice().iter().all(|&v| v == 0.0));
        assert!(matches!(bdr_project(&model, &Matrix::zeros(3, 2)), Err(BdrError::DimMismatch { .. })));
    }
}
