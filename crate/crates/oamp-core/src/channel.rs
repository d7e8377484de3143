//! Rayleigh and Kronecker-correlated MIMO channels, SNR-to-noise mapping and
//! received-signal synthesis.

use alloc::{vec, vec::Vec};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fmath;
use crate::modem::{modulate, Constellation};
use crate::numerics::{sym_sqrt, ComplexMatrix, Mat};
use crate::rng::Rng;

/// Receive/transmit correlation coefficients for the exponential Kronecker
/// model (R)_{ij} = c^{|i-j|}.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrelationSpec {
    pub c_r: f64,
    pub c_t: f64,
}

impl CorrelationSpec {
    pub fn new(c_r: f64, c_t: f64) -> Result<Self> {
        for c in [c_r, c_t] {
            if !(0.0..1.0).contains(&c) {
                return Err(Error::CorrelationOutOfRange(c));
            }
        }
        Ok(CorrelationSpec { c_r, c_t })
    }

    pub fn uncorrelated() -> Self {
        CorrelationSpec { c_r: 0.0, c_t: 0.0 }
    }

    pub fn is_identity(&self) -> bool {
        self.c_r == 0.0 && self.c_t == 0.0
    }
}

/// One simulated transmission: channel, transmitted symbol indices, received
/// vector and the noise level it was drawn at.
#[derive(Debug, Clone)]
pub struct ChannelSample {
    pub h: ComplexMatrix,
    pub x_true: Vec<u16>,
    pub y: Vec<Complex64>,
    pub sigma: f64,
    pub snr_db: f64,
}

/// i.i.d. circularly-symmetric complex Gaussian channel, unit entry variance.
pub fn rayleigh_channel(m: usize, n: usize, rng: &mut Rng) -> ComplexMatrix {
    let mut h = ComplexMatrix::zeros(m, n);
    for z in h.data_mut() {
        let (re, im) = rng.next_complex_normal(1.0);
        *z = Complex64::new(re, im);
    }
    h
}

fn exponential_correlation(n: usize, c: f64) -> Mat {
    Mat::from_fn(n, n, |i, j| {
        let d = i.abs_diff(j) as u32;
        let mut p = 1.0;
        for _ in 0..d {
            p *= c;
        }
        p
    })
}

/// Precomputed symmetric square roots of the correlation matrices, reusable
/// across samples with the same dimensions.
#[derive(Debug, Clone)]
pub struct CorrelationTransform {
    spec: CorrelationSpec,
    r_sqrt: Option<Mat>,
    t_sqrt: Option<Mat>,
}

impl CorrelationTransform {
    pub fn new(spec: CorrelationSpec, m: usize, n: usize) -> Result<Self> {
        CorrelationSpec::new(spec.c_r, spec.c_t)?;
        let r_sqrt = if spec.c_r != 0.0 {
            Some(sym_sqrt(&exponential_correlation(m, spec.c_r))?)
        } else {
            None
        };
        let t_sqrt = if spec.c_t != 0.0 {
            Some(sym_sqrt(&exponential_correlation(n, spec.c_t))?)
        } else {
            None
        };
        Ok(CorrelationTransform {
            spec,
            r_sqrt,
            t_sqrt,
        })
    }

    /// R_r^{1/2} H R_t^{1/2}. Identity coefficients leave H untouched.
    pub fn apply(&self, h: &ComplexMatrix) -> ComplexMatrix {
        let (m, n) = (h.rows(), h.cols());
        let mut out = h.clone();
        if let Some(rs) = &self.r_sqrt {
            let mut tmp = ComplexMatrix::zeros(m, n);
            for i in 0..m {
                for j in 0..n {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for k in 0..m {
                        acc += rs[(i, k)] * out.at(k, j);
                    }
                    *tmp.at_mut(i, j) = acc;
                }
            }
            out = tmp;
        }
        if let Some(ts) = &self.t_sqrt {
            let mut tmp = ComplexMatrix::zeros(m, n);
            for i in 0..m {
                for j in 0..n {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for k in 0..n {
                        acc += out.at(i, k) * ts[(k, j)];
                    }
                    *tmp.at_mut(i, j) = acc;
                }
            }
            out = tmp;
        }
        out
    }

    pub fn spec(&self) -> CorrelationSpec {
        self.spec
    }
}

/// Apply exponential Kronecker correlation to a channel draw.
pub fn kronecker_correlate(h: &ComplexMatrix, spec: CorrelationSpec) -> Result<ComplexMatrix> {
    let transform = CorrelationTransform::new(spec, h.rows(), h.cols())?;
    Ok(transform.apply(h))
}

/// Noise standard deviation per complex dimension for a target SNR in dB,
/// defined as total received signal power over total noise power:
/// sigma^2 = N * Es / 10^(snr/10) for unit-variance channel entries.
pub fn sigma_from_snr(snr_db: f64, n: usize, es: f64) -> f64 {
    fmath::sqrt(n as f64 * es * fmath::pow(10.0, -snr_db / 10.0))
}

/// y = Hx + noise with CN(0, sigma^2) entries.
pub fn transmit(
    h: &ComplexMatrix,
    x: &[Complex64],
    sigma: f64,
    rng: &mut Rng,
) -> Result<Vec<Complex64>> {
    let mut y = h.mul_vec(x)?;
    let var = sigma * sigma;
    if var > 0.0 {
        for v in &mut y {
            let (re, im) = rng.next_complex_normal(var);
            *v += Complex64::new(re, im);
        }
    }
    Ok(y)
}

/// Per-sample SNR assignment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SnrPolicy {
    FixedDb(f64),
    UniformDb { lo: f64, hi: f64 },
}

impl SnrPolicy {
    fn draw(&self, rng: &mut Rng) -> f64 {
        match *self {
            SnrPolicy::FixedDb(v) => v,
            SnrPolicy::UniformDb { lo, hi } => rng.uniform(lo, hi),
        }
    }
}

/// Configuration for dataset synthesis.
#[derive(Debug, Clone)]
pub struct GenConfig {
    pub m: usize,
    pub n: usize,
    pub order: usize,
    pub snr: SnrPolicy,
    pub correlation: CorrelationSpec,
    pub count: usize,
    pub seed: u64,
}

/// Generate sample `index` of a dataset. Uses only the stream derived from
/// (seed, index), so generation order and parallelism do not matter.
pub fn generate_sample(
    cfg: &GenConfig,
    constellation: &Constellation,
    transform: &CorrelationTransform,
    index: u64,
) -> Result<ChannelSample> {
    let mut rng = Rng::new(cfg.seed).derive(index);
    // Draw order is part of the dataset contract: channel, SNR, symbols, noise.
    let h = rayleigh_channel(cfg.m, cfg.n, &mut rng);
    let h = transform.apply(&h);
    let snr_db = cfg.snr.draw(&mut rng);
    let sigma = sigma_from_snr(snr_db, cfg.n, 1.0);
    let x_true: Vec<u16> = (0..cfg.n)
        .map(|_| rng.next_index(cfg.order) as u16)
        .collect();
    let x = modulate(&x_true, constellation)?;
    let y = transmit(&h, &x, sigma, &mut rng)?;
    Ok(ChannelSample {
        h,
        x_true,
        y,
        sigma,
        snr_db,
    })
}

/// Generate a whole dataset in index order.
pub fn generate_samples(cfg: &GenConfig, constellation: &Constellation) -> Result<Vec<ChannelSample>> {
    let transform = CorrelationTransform::new(cfg.correlation, cfg.m, cfg.n)?;
    (0..cfg.count as u64)
        .map(|i| generate_sample(cfg, constellation, &transform, i))
        .collect()
}

/// Build a sample around an externally supplied channel matrix (ingested
/// channels keep the same symbol/noise drawing discipline as synthetic ones).
pub fn sample_from_channel(
    h: &ComplexMatrix,
    cfg: &GenConfig,
    constellation: &Constellation,
    index: u64,
) -> Result<ChannelSample> {
    let mut rng = Rng::new(cfg.seed).derive(index);
    let snr_db = cfg.snr.draw(&mut rng);
    let sigma = sigma_from_snr(snr_db, h.cols(), 1.0);
    let x_true: Vec<u16> = (0..h.cols())
        .map(|_| rng.next_index(cfg.order) as u16)
        .collect();
    let x = modulate(&x_true, constellation)?;
    let y = transmit(h, &x, sigma, &mut rng)?;
    Ok(ChannelSample {
        h: h.clone(),
        x_true,
        y,
        sigma,
        snr_db,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::modem::qam_constellation;

    #[test]
    fn rayleigh_entries_have_unit_power() {
        let mut rng = Rng::new(100);
        let mut sum = 0.0;
        let draws = 100_000usize;
        let h = {
            // One big draw gives 1e5 entries.
            rayleigh_channel(500, 200, &mut rng)
        };
        for z in h.data() {
            sum += z.norm_sqr();
        }
        let mean = sum / (500.0 * 200.0);
        assert!((mean - 1.0).abs() < 0.02, "mean power {mean}");
        let _ = draws;
    }

    #[test]
    fn rayleigh_is_deterministic() {
        let a = rayleigh_channel(4, 3, &mut Rng::new(7));
        let b = rayleigh_channel(4, 3, &mut Rng::new(7));
        assert_eq!(a.data(), b.data());
    }

    #[test]
    fn rayleigh_single_entry_is_finite() {
        let h = rayleigh_channel(1, 1, &mut Rng::new(1));
        assert!(h.is_finite());
    }

    #[test]
    fn zero_correlation_is_identity() {
        let h = rayleigh_channel(4, 4, &mut Rng::new(9));
        let out = kronecker_correlate(&h, CorrelationSpec::uncorrelated()).unwrap();
        assert_eq!(out.data(), h.data());
    }

    #[test]
    fn near_unit_correlation_collapses_rows() {
        let spec = CorrelationSpec::new(0.9999, 0.0).unwrap();
        let h = rayleigh_channel(2, 2, &mut Rng::new(5));
        let out = kronecker_correlate(&h, spec).unwrap();
        for j in 0..2 {
            let a = out.at(0, j);
            let b = out.at(1, j);
            assert!((a - b).norm() < 0.05 * a.norm().max(1.0), "{a} vs {b}");
        }
    }

    #[test]
    fn correlation_rejects_unit_coefficient() {
        assert!(matches!(
            CorrelationSpec::new(1.0, 0.0),
            Err(Error::CorrelationOutOfRange(_))
        ));
    }

    #[test]
    fn receive_covariance_matches_exponential_model() {
        // Oracle: Monte-Carlo estimate of E[H H^H] / N against c^{|i-j|}.
        let spec = CorrelationSpec::new(0.1, 0.1).unwrap();
        let (m, n) = (4, 4);
        let transform = CorrelationTransform::new(spec, m, n).unwrap();
        let mut rng = Rng::new(77);
        let draws = 100_000;
        let mut cov = Mat::zeros(m, m);
        for _ in 0..draws {
            let h = transform.apply(&rayleigh_channel(m, n, &mut rng));
            for i in 0..m {
                for j in 0..m {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for k in 0..n {
                        acc += h.at(i, k) * h.at(j, k).conj();
                    }
                    cov[(i, j)] += acc.re;
                }
            }
        }
        let scale = 1.0 / (draws as f64 * n as f64);
        for i in 0..m {
            for j in 0..m {
                let expect = 0.1f64.powi(i.abs_diff(j) as i32);
                let got = cov[(i, j)] * scale;
                assert!((got - expect).abs() < 0.02, "cov[{i}{j}] {got} vs {expect}");
            }
        }
    }

    #[test]
    fn sigma_from_snr_arithmetic() {
        let s = sigma_from_snr(0.0, 8, 1.0);
        assert!((s * s - 8.0).abs() < 1e-12);
        let s = sigma_from_snr(10.0, 8, 1.0);
        assert!((s * s - 0.8).abs() < 1e-12);
    }

    #[test]
    fn empirical_snr_matches_definition() {
        // Oracle: Monte-Carlo of E||Hx||^2 / E||noise||^2 at 10 dB.
        let c = qam_constellation(4).unwrap();
        let mut rng = Rng::new(31);
        let (m, n) = (8, 8);
        let sigma = sigma_from_snr(10.0, n, 1.0);
        let mut sig_energy = 0.0;
        let mut noise_energy = 0.0;
        for _ in 0..10_000 {
            let h = rayleigh_channel(m, n, &mut rng);
            let idx: Vec<u16> = (0..n).map(|_| rng.next_index(4) as u16).collect();
            let x = modulate(&idx, &c).unwrap();
            let clean = h.mul_vec(&x).unwrap();
            let y = transmit(&h, &x, sigma, &mut rng).unwrap();
            for (a, b) in clean.iter().zip(&y) {
                sig_energy += a.norm_sqr();
                noise_energy += (b - a).norm_sqr();
            }
        }
        let ratio = sig_energy / noise_energy;
        assert!((ratio - 10.0).abs() < 0.3, "snr ratio {ratio}");
    }

    #[test]
    fn transmit_noiseless_is_exact() {
        let mut rng = Rng::new(3);
        let h = rayleigh_channel(3, 2, &mut rng);
        let x = [Complex64::new(1.0, 0.0), Complex64::new(0.0, -1.0)];
        let y = transmit(&h, &x, 0.0, &mut rng).unwrap();
        let clean = h.mul_vec(&x).unwrap();
        assert_eq!(y, clean);
    }

    #[test]
    fn transmit_zero_channel_gives_noise_variance() {
        let h = ComplexMatrix::zeros(1, 1);
        let x = [Complex64::new(0.0, 0.0)];
        let sigma = 1.5;
        let mut rng = Rng::new(4);
        let mut energy = 0.0;
        let draws = 100_000;
        for _ in 0..draws {
            let y = transmit(&h, &x, sigma, &mut rng).unwrap();
            energy += y[0].norm_sqr();
        }
        let var = energy / draws as f64;
        assert!((var - sigma * sigma).abs() < 0.03 * sigma * sigma, "{var}");
    }

    #[test]
    fn transmit_is_seed_reproducible() {
        let h = rayleigh_channel(2, 2, &mut Rng::new(8));
        let x = [Complex64::new(1.0, 1.0), Complex64::new(-1.0, 0.5)];
        let a = transmit(&h, &x, 0.7, &mut Rng::new(42)).unwrap();
        let b = transmit(&h, &x, 0.7, &mut Rng::new(42)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn generation_is_order_independent() {
        let cfg = GenConfig {
            m: 4,
            n: 2,
            order: 4,
            snr: SnrPolicy::UniformDb { lo: 5.0, hi: 14.0 },
            correlation: CorrelationSpec::new(0.1, 0.1).unwrap(),
            count: 8,
            seed: 99,
        };
        let c = qam_constellation(4).unwrap();
        let all = generate_samples(&cfg, &c).unwrap();
        let transform = CorrelationTransform::new(cfg.correlation, cfg.m, cfg.n).unwrap();
        // Regenerate sample 5 in isolation; must match bit for bit.
        let lone = generate_sample(&cfg, &c, &transform, 5).unwrap();
        assert_eq!(lone.h.data(), all[5].h.data());
        assert_eq!(lone.y, all[5].y);
        assert_eq!(lone.x_true, all[5].x_true);
        assert_eq!(lone.snr_db, all[5].snr_db);
    }

    #[test]
    fn generated_snr_matches_request() {
        let cfg = GenConfig {
            m: 8,
            n: 8,
            order: 4,
            snr: SnrPolicy::FixedDb(10.0),
            correlation: CorrelationSpec::uncorrelated(),
            count: 10_000,
            seed: 1234,
        };
        let c = qam_constellation(4).unwrap();
        let samples = generate_samples(&cfg, &c).unwrap();
        let mut sig = 0.0;
        let mut noise = 0.0;
        for s in &samples {
            let x = modulate(&s.x_true, &c).unwrap();
            let clean = s.h.mul_vec(&x).unwrap();
            for (a, b) in clean.iter().zip(&s.y) {
                sig += a.norm_sqr();
                noise += (b - a).norm_sqr();
            }
        }
        let snr_db = 10.0 * (sig / noise).log10();
        assert!((snr_db - 10.0).abs() < 0.2, "empirical snr {snr_db}");
    }
}
