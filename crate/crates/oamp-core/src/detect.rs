//! The detector family: linear MMSE, OAMP, OAMPNet2 with learned scalars,
//! self-attention enhanced OAMP, and a brute-force ML oracle for tiny systems.
//!
//! Everything works on the real-equivalent system; complex channels cross the
//! boundary through [`crate::numerics::to_real_equivalent`].

use alloc::{vec, vec::Vec};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fmath;
use crate::modem::{decide_real_equivalent, ser, Constellation};
use crate::neural::model::AttentionModel;
use crate::neural::sa::{sa_infer_iteration, SaCarry, SaTokenConsts};
use crate::numerics::{solve_spd, ComplexMatrix, Mat, RealSystem};

/// Iteration budget and clamp floors for the OAMP family.
#[derive(Debug, Clone, Copy)]
pub struct OampConfig {
    pub t_iters: usize,
    pub v_min: f64,
    pub tau_min: f64,
}

impl Default for OampConfig {
    fn default() -> Self {
        OampConfig {
            t_iters: 10,
            v_min: 1e-9,
            tau_min: 1e-9,
        }
    }
}

impl OampConfig {
    pub fn with_iters(t_iters: usize) -> Self {
        OampConfig {
            t_iters,
            ..Default::default()
        }
    }
}

/// Learned per-iteration scalars of OAMPNet2. Identity values reproduce
/// plain OAMP exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct OampNet2Params {
    pub gamma: Vec<f64>,
    pub theta: Vec<f64>,
    pub phi: Vec<f64>,
    pub zeta: Vec<f64>,
}

impl OampNet2Params {
    /// gamma = theta = phi = 1, zeta = 0 for every iteration.
    pub fn identity(t_iters: usize) -> Self {
        OampNet2Params {
            gamma: vec![1.0; t_iters],
            theta: vec![1.0; t_iters],
            phi: vec![1.0; t_iters],
            zeta: vec![0.0; t_iters],
        }
    }

    pub fn len(&self) -> usize {
        self.gamma.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gamma.is_empty()
    }

    pub fn is_finite(&self) -> bool {
        self.gamma
            .iter()
            .chain(&self.theta)
            .chain(&self.phi)
            .chain(&self.zeta)
            .all(|v| v.is_finite())
    }

    fn check(&self, t_iters: usize) -> Result<()> {
        for (name, v) in [
            ("gamma", &self.gamma),
            ("theta", &self.theta),
            ("phi", &self.phi),
            ("zeta", &self.zeta),
        ] {
            if v.len() != t_iters {
                return Err(Error::ShapeMismatch(alloc::format!(
                    "{name} has {} entries for {t_iters} iterations",
                    v.len()
                )));
            }
        }
        Ok(())
    }
}

/// Per-iteration diagnostics. For OAMP-SA `tau_sq` records the model's
/// refined variance instead (it has no analytic tau).
#[derive(Debug, Clone, Copy)]
pub struct IterTrace {
    pub v_sq: f64,
    pub tau_sq: f64,
    pub ser: Option<f64>,
}

/// Linear MMSE without interference cancellation:
/// x = (H^T H + sigma^2/2 I)^-1 H^T y on the real-equivalent system.
pub fn mmse_detect(sys: &RealSystem) -> Result<Vec<f64>> {
    let two_n = 2 * sys.n;
    let ht = sys.h.transpose();
    let mut a = ht.gram_t();
    let reg = 0.5 * sys.sigma * sys.sigma;
    for i in 0..two_n {
        a[(i, i)] += reg;
    }
    let rhs = ht.mul_vec(&sys.y)?;
    let rhs = Mat::from_vec(two_n, 1, rhs)?;
    let x = solve_spd(&a, &rhs)?;
    Ok(x.data().to_vec())
}

const ML_CANDIDATE_CAP: u64 = 1_000_000;

/// Exhaustive maximum-likelihood search over all candidate symbol vectors.
/// Ties go to the lexicographically smallest index vector.
pub fn ml_detect_bruteforce(
    h: &ComplexMatrix,
    y: &[Complex64],
    c: &Constellation,
) -> Result<Vec<u16>> {
    if y.len() != h.rows() {
        return Err(Error::DimensionMismatch(alloc::format!(
            "ML search: y has {} entries for {} channel rows",
            y.len(),
            h.rows()
        )));
    }
    let n = h.cols();
    let order = c.order();
    let mut candidates: u64 = 1;
    for _ in 0..n {
        candidates = candidates.saturating_mul(order as u64);
        if candidates > ML_CANDIDATE_CAP {
            return Err(Error::SearchSpaceTooLarge {
                candidates,
                cap: ML_CANDIDATE_CAP,
            });
        }
    }
    let points = c.points();
    let mut digits = vec![0u16; n];
    let mut best = digits.clone();
    let mut best_metric = f64::INFINITY;
    let mut residual = vec![Complex64::new(0.0, 0.0); h.rows()];
    loop {
        for (i, r) in residual.iter_mut().enumerate() {
            let mut acc = y[i];
            for (j, &d) in digits.iter().enumerate() {
                acc -= h.at(i, j) * points[d as usize];
            }
            *r = acc;
        }
        let metric: f64 = residual.iter().map(|z| z.norm_sqr()).sum();
        if metric < best_metric {
            best_metric = metric;
            best.copy_from_slice(&digits);
        }
        // Lexicographic odometer, most significant digit first.
        let mut pos = n;
        loop {
            if pos == 0 {
                return Ok(best);
            }
            pos -= 1;
            digits[pos] += 1;
            if (digits[pos] as usize) < order {
                break;
            }
            digits[pos] = 0;
        }
    }
}

pub(crate) struct SysCache {
    /// H H^T of the real-equivalent channel, 2M x 2M.
    gram: Mat,
    /// tr(H^T H) = squared Frobenius norm.
    trace_hth: f64,
}

impl SysCache {
    pub(crate) fn new(sys: &RealSystem) -> Self {
        SysCache {
            gram: sys.h.gram_t(),
            trace_hth: sys.h.frobenius_sq(),
        }
    }
}

/// De-correlated linear estimator W = (2N / tr(W_hat H)) * W_hat with
/// W_hat = v^2 H^T (v^2 H H^T + sigma^2/2 I)^-1.
pub fn oamp_w(sys: &RealSystem, v_sq: f64) -> Result<Mat> {
    oamp_w_with_cache(sys, &SysCache::new(sys), v_sq)
}

pub(crate) fn oamp_w_with_cache(sys: &RealSystem, cache: &SysCache, v_sq: f64) -> Result<Mat> {
    let two_m = 2 * sys.m;
    let two_n = 2 * sys.n;
    let mut a = cache.gram.scale(v_sq);
    let reg = 0.5 * sys.sigma * sys.sigma;
    for i in 0..two_m {
        a[(i, i)] += reg;
    }
    // W_hat^T = (A^-1 H) * v^2, solved rather than inverted.
    let x = solve_spd(&a, &sys.h)?;
    let mut tr_wh = 0.0;
    for (xe, he) in x.data().iter().zip(sys.h.data()) {
        tr_wh += xe * he;
    }
    tr_wh *= v_sq;
    if !(tr_wh > 1e-300) || !tr_wh.is_finite() {
        return Err(Error::DegenerateNormalization);
    }
    let scale = 2.0 * sys.n as f64 / tr_wh;
    let mut w = Mat::zeros(two_n, two_m);
    for i in 0..two_n {
        for j in 0..two_m {
            w[(i, j)] = x[(j, i)] * v_sq * scale;
        }
    }
    Ok(w)
}

/// r = x_prev + gamma * W (y - H x_prev).
pub fn oamp_linear_step(
    x_prev: &[f64],
    sys: &RealSystem,
    w: &Mat,
    gamma: f64,
) -> Result<Vec<f64>> {
    let hx = sys.h.mul_vec(x_prev)?;
    let residual: Vec<f64> = sys.y.iter().zip(&hx).map(|(y, hx)| y - hx).collect();
    let update = w.mul_vec(&residual)?;
    Ok(x_prev
        .iter()
        .zip(&update)
        .map(|(x, u)| x + gamma * u)
        .collect())
}

/// Elementwise posterior mean over PAM levels under a Gaussian observation
/// model with variance tau_sq and uniform prior. Returns the estimate and the
/// per-level posteriors (row-major, len(r) x K).
///
/// Logits are taken relative to the nearest level, which keeps the
/// exponentials in [0, 1] for arbitrarily large |r|.
pub fn posterior_mean_denoiser(r: &[f64], tau_sq: f64, pam: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let k = pam.len();
    let inv_two_tau = 0.5 / tau_sq;
    let mut x = vec![0.0; r.len()];
    let mut posteriors = vec![0.0; r.len() * k];
    for (i, &ri) in r.iter().enumerate() {
        let star = crate::modem::nearest_pam_index(ri, pam);
        let a_star = pam[star];
        let row = &mut posteriors[i * k..(i + 1) * k];
        let mut z = 0.0;
        for (j, &a) in pam.iter().enumerate() {
            // (r-a)^2 - (r-a_star)^2, factored to avoid squaring large r.
            let diff = (a_star - a) * (2.0 * ri - a - a_star);
            row[j] = fmath::exp(-diff * inv_two_tau);
            z += row[j];
        }
        let mut mean = 0.0;
        for (j, &a) in pam.iter().enumerate() {
            row[j] /= z;
            mean += a * row[j];
        }
        x[i] = mean;
    }
    (x, posteriors)
}

/// v^2 = max((||y - H x||^2 - M sigma^2) / tr(H^T H), v_min) in the
/// real-equivalent convention (2M residual entries, noise energy M sigma^2).
pub fn error_variance(sys: &RealSystem, x: &[f64], v_min: f64) -> f64 {
    error_variance_with_cache(sys, &SysCache::new(sys), x, v_min)
}

pub(crate) fn error_variance_with_cache(
    sys: &RealSystem,
    cache: &SysCache,
    x: &[f64],
    v_min: f64,
) -> f64 {
    let hx = match sys.h.mul_vec(x) {
        Ok(v) => v,
        Err(_) => return v_min,
    };
    let res_sq: f64 = sys
        .y
        .iter()
        .zip(&hx)
        .map(|(y, hx)| (y - hx) * (y - hx))
        .sum();
    let num = res_sq - sys.m as f64 * sys.sigma * sys.sigma;
    if cache.trace_hth > 0.0 {
        (num / cache.trace_hth).max(v_min)
    } else {
        v_min
    }
}

/// tau^2 = max(tr(B B^T) v^2 / 2N + theta^2 tr(W W^T) sigma^2 / 4N, tau_min)
/// with B = I - theta W H.
pub fn tau_update(sys: &RealSystem, w: &Mat, v_sq: f64, theta: f64, tau_min: f64) -> f64 {
    let two_n = 2 * sys.n;
    let wh = match w.matmul(&sys.h) {
        Ok(m) => m,
        Err(_) => return tau_min,
    };
    let mut tr_bbt = 0.0;
    for i in 0..two_n {
        for j in 0..two_n {
            let ident = if i == j { 1.0 } else { 0.0 };
            let b = ident - theta * wh[(i, j)];
            tr_bbt += b * b;
        }
    }
    let tr_wwt = w.frobenius_sq();
    let sigma_sq = sys.sigma * sys.sigma;
    let tau = tr_bbt * v_sq / (2.0 * sys.n as f64)
        + theta * theta * tr_wwt * sigma_sq / (4.0 * sys.n as f64);
    tau.max(tau_min)
}

fn check_finite(x: &[f64]) -> Result<()> {
    if x.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::SingularSystem)
    }
}

/// Plain OAMP, run for the configured number of iterations.
/// Returns the final real-equivalent estimate and a per-iteration trace.
pub fn oamp_detect(
    sys: &RealSystem,
    c: &Constellation,
    cfg: &OampConfig,
    labels: Option<&[u16]>,
) -> Result<(Vec<f64>, Vec<IterTrace>)> {
    let params = OampNet2Params::identity(cfg.t_iters);
    run_oamp_family(sys, c, cfg, &params, false, labels)
}

/// OAMPNet2: OAMP with gamma scaling the linear update, theta scaling W in
/// the B/tau updates, and x_t = phi (E{s|r,tau} - zeta r).
pub fn oampnet2_detect(
    sys: &RealSystem,
    c: &Constellation,
    cfg: &OampConfig,
    params: &OampNet2Params,
    labels: Option<&[u16]>,
) -> Result<(Vec<f64>, Vec<IterTrace>)> {
    params.check(cfg.t_iters)?;
    run_oamp_family(sys, c, cfg, params, true, labels)
}

fn run_oamp_family(
    sys: &RealSystem,
    c: &Constellation,
    cfg: &OampConfig,
    params: &OampNet2Params,
    learned_combine: bool,
    labels: Option<&[u16]>,
) -> Result<(Vec<f64>, Vec<IterTrace>)> {
    let two_n = 2 * sys.n;
    let cache = SysCache::new(sys);
    let pam = c.pam_levels();
    let mut x = vec![0.0; two_n];
    let mut v_sq = 1.0;
    let mut tau_sq = 1.0;
    let mut trace = Vec::with_capacity(cfg.t_iters);
    for t in 0..cfg.t_iters {
        let w = oamp_w_with_cache(sys, &cache, v_sq)?;
        let r = oamp_linear_step(&x, sys, &w, params.gamma[t])?;
        let (estimate, _posteriors) = posterior_mean_denoiser(&r, tau_sq, pam);
        x = if learned_combine {
            estimate
                .iter()
                .zip(&r)
                .map(|(e, ri)| params.phi[t] * (e - params.zeta[t] * ri))
                .collect()
        } else {
            estimate
        };
        check_finite(&x)?;
        v_sq = error_variance_with_cache(sys, &cache, &x, cfg.v_min);
        tau_sq = tau_update(sys, &w, v_sq, params.theta[t], cfg.tau_min);
        let iter_ser = labels
            .map(|truth| ser(&decide_real_equivalent(&x, c), truth))
            .transpose()?;
        trace.push(IterTrace {
            v_sq,
            tau_sq,
            ser: iter_ser,
        });
    }
    Ok((x, trace))
}

/// Self-attention enhanced OAMP. The analytic denoiser and tau recursion are
/// replaced by the attention model, which produces per-token symbol
/// likelihoods and a refined variance fed to the next W update.
pub fn oamp_sa_detect(
    sys: &RealSystem,
    c: &Constellation,
    cfg: &OampConfig,
    model: &AttentionModel,
    labels: Option<&[u16]>,
) -> Result<(Vec<f64>, Vec<IterTrace>)> {
    if model.expected_m() != sys.m || model.levels() != c.levels_per_axis() {
        return Err(Error::ShapeMismatch(alloc::format!(
            "model built for M={}, K={} but system has M={}, K={}",
            model.expected_m(),
            model.levels(),
            sys.m,
            c.levels_per_axis()
        )));
    }
    let cache = SysCache::new(sys);
    let consts = SaTokenConsts::new(sys);
    let mut carry = SaCarry::start(2 * sys.n, model.d_state(), model.levels());
    let mut trace = Vec::with_capacity(cfg.t_iters);
    for _t in 0..cfg.t_iters {
        let w = oamp_w_with_cache(sys, &cache, carry.v_hat_sq.max(cfg.v_min))?;
        let r = oamp_linear_step(&carry.x, sys, &w, 1.0)?;
        let v_sq = error_variance_with_cache(sys, &cache, &carry.x, cfg.v_min);
        carry = sa_infer_iteration(model, &consts, &carry, &r, v_sq, c.pam_levels())?;
        check_finite(&carry.x)?;
        let iter_ser = labels
            .map(|truth| ser(&decide_real_equivalent(&carry.x, c), truth))
            .transpose()?;
        trace.push(IterTrace {
            v_sq,
            tau_sq: carry.v_hat_sq,
            ser: iter_ser,
        });
    }
    Ok((carry.x, trace))
}
