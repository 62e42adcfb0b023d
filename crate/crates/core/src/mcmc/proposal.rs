//! Multivariate Student-t density used as the independence proposal.

use std::f64::consts::PI;
use std::ops::Deref;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

/// Multivariate Student-t with location `mu`, scale matrix `S` and `nu`
/// degrees of freedom:
///
/// ```text
/// ln p(x) = lnG((nu+d)/2) - lnG(nu/2) - d/2 ln(nu pi) - 1/2 ln|S|
///           - (nu+d)/2 ln(1 + (x-mu)' S^-1 (x-mu) / nu)
/// ```
#[derive(Debug, Clone, PartialEq)]
pub struct StudentT {
    location: DVector<f64>,
    scale: DMatrix<f64>,
    /// Lower Cholesky factor of `scale`.
    factor: DMatrix<f64>,
    dof: f64,
    log_norm: f64,
}

impl StudentT {
    pub fn new(location: Vec<f64>, scale: DMatrix<f64>, dof: f64) -> Result<Self> {
        let d = location.len();
        if d == 0 {
            return Err(Error::Dimension { expected: 1, got: 0 });
        }
        if scale.nrows() != d || scale.ncols() != d {
            return Err(Error::Dimension {
                expected: d,
                got: scale.nrows(),
            });
        }
        if !(dof > 0.0 && dof.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "degrees of freedom must be positive, got {dof}"
            )));
        }
        let max_abs = scale.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        for i in 0..d {
            for j in 0..i {
                if (scale[(i, j)] - scale[(j, i)]).abs() > 1e-12 * max_abs {
                    return Err(Error::NotPositiveDefinite);
                }
            }
        }
        if scale.iter().any(|v| !v.is_finite()) {
            return Err(Error::NotPositiveDefinite);
        }
        let factor = scale
            .clone()
            .cholesky()
            .ok_or(Error::NotPositiveDefinite)?
            .unpack();
        let log_det: f64 = 2.0 * factor.diagonal().iter().map(|v| v.ln()).sum::<f64>();
        if !log_det.is_finite() {
            return Err(Error::NotPositiveDefinite);
        }
        let df = d as f64;
        let log_norm = ln_gamma(0.5 * (dof + df))
            - ln_gamma(0.5 * dof)
            - 0.5 * df * (dof * PI).ln()
            - 0.5 * log_det;
        Ok(Self {
            location: DVector::from_vec(location),
            scale,
            factor,
            dof,
            log_norm,
        })
    }

    pub fn dim(&self) -> usize {
        self.location.len()
    }

    pub fn location(&self) -> &[f64] {
        self.location.as_slice()
    }

    pub fn scale(&self) -> &DMatrix<f64> {
        &self.scale
    }

    pub fn dof(&self) -> f64 {
        self.dof
    }

    /// Covariance `scale * nu / (nu - 2)`, defined for `nu > 2`.
    pub fn covariance(&self) -> Option<DMatrix<f64>> {
        (self.dof > 2.0).then(|| &self.scale * (self.dof / (self.dof - 2.0)))
    }

    /// Same scale and dof, moved to a new location.
    pub fn recentered(&self, location: &[f64]) -> Self {
        assert_eq!(location.len(), self.dim());
        Self {
            location: DVector::from_column_slice(location),
            ..self.clone()
        }
    }

    /// Squared Mahalanobis distance via forward substitution on the factor.
    fn mahalanobis2(&self, x: &[f64]) -> f64 {
        let d = self.dim();
        let mut y = [0.0_f64; 8];
        let mut heap;
        let y: &mut [f64] = if d <= y.len() {
            &mut y[..d]
        } else {
            heap = vec![0.0; d];
            &mut heap
        };
        let mut q = 0.0;
        for i in 0..d {
            let mut s = x[i] - self.location[i];
            for (j, yj) in y[..i].iter().enumerate() {
                s -= self.factor[(i, j)] * yj;
            }
            y[i] = s / self.factor[(i, i)];
            q += y[i] * y[i];
        }
        q
    }

    /// Log-density at `x`. Panics if `x` has the wrong dimension.
    pub fn logpdf(&self, x: &[f64]) -> f64 {
        assert_eq!(x.len(), self.dim(), "dimension mismatch");
        let d = self.dim() as f64;
        self.log_norm - 0.5 * (self.dof + d) * (self.mahalanobis2(x) / self.dof).ln_1p()
    }

    /// `location + L z sqrt(nu / w)`, `z ~ N(0, I)`, `w ~ chi2(nu)`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let d = self.dim();
        let z = DVector::from_iterator(d, (0..d).map(|_| StandardNormal.sample(rng)));
        let chi2 = ChiSquared::new(self.dof).expect("dof validated at construction");
        let w: f64 = chi2.sample(rng);
        let x = &self.location + (&self.factor * z) * (self.dof / w).sqrt();
        x.as_slice().to_vec()
    }

    /// Stable 64-bit hash of location, scale and dof.
    pub fn fingerprint(&self) -> u64 {
        let bits = self
            .location
            .iter()
            .chain(self.scale.iter())
            .chain(std::iter::once(&self.dof))
            .flat_map(|v| v.to_bits().to_le_bytes());
        crate::fnv1a(bits)
    }
}

pub fn student_t_logpdf(x: &[f64], density: &StudentT) -> Result<f64> {
    if x.len() != density.dim() {
        return Err(Error::Dimension {
            expected: density.dim(),
            got: x.len(),
        });
    }
    Ok(density.logpdf(x))
}

pub fn sample_student_t<R: Rng + ?Sized>(density: &StudentT, rng: &mut R) -> Vec<f64> {
    density.sample(rng)
}

/// A [`StudentT`] with `dof > 2`, so that its covariance exists.
#[derive(Debug, Clone, PartialEq)]
pub struct ProposalDensity(StudentT);

impl ProposalDensity {
    pub fn new(location: Vec<f64>, scale: DMatrix<f64>, dof: f64) -> Result<Self> {
        if dof.is_nan() || dof <= 2.0 {
            return Err(Error::InvalidConfig(format!(
                "proposal degrees of freedom must exceed 2, got {dof}"
            )));
        }
        StudentT::new(location, scale, dof).map(Self)
    }

    pub fn recentered(&self, location: &[f64]) -> Self {
        Self(self.0.recentered(location))
    }

    pub fn as_student_t(&self) -> &StudentT {
        &self.0
    }
}

impl Deref for ProposalDensity {
    type Target = StudentT;

    fn deref(&self) -> &StudentT {
        &self.0
    }
}

/// Fits a proposal to pilot draws: location is the column mean and scale is
/// `inflation^2` times the sample covariance. A diagonal jitter of 1e-10 is
/// added once if the scaled covariance is not positive-definite.
pub fn fit_proposal<D: AsRef<[f64]>>(
    pilot: &[D],
    dof: f64,
    inflation: f64,
) -> Result<ProposalDensity> {
    let Some(first) = pilot.first() else {
        return Err(Error::TooShort { needed: 1, got: 0 });
    };
    let d = first.as_ref().len();
    let n = pilot.len();
    if n < d + 2 {
        return Err(Error::TooShort {
            needed: d + 2,
            got: n,
        });
    }
    if let Some(bad) = pilot.iter().find(|row| row.as_ref().len() != d) {
        return Err(Error::Dimension {
            expected: d,
            got: bad.as_ref().len(),
        });
    }
    if !(inflation > 0.0 && inflation.is_finite()) {
        return Err(Error::InvalidConfig(format!(
            "scale inflation must be positive, got {inflation}"
        )));
    }
    if pilot.iter().all(|row| row.as_ref() == first.as_ref()) {
        return Err(Error::ZeroScatter);
    }

    let mut mean = vec![0.0; d];
    for row in pilot {
        for (m, v) in mean.iter_mut().zip(row.as_ref()) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);

    let mut cov = DMatrix::<f64>::zeros(d, d);
    for row in pilot {
        let row = row.as_ref();
        for i in 0..d {
            let di = row[i] - mean[i];
            for j in 0..=i {
                cov[(i, j)] += di * (row[j] - mean[j]);
            }
        }
    }
    let scale_factor = inflation * inflation / (n - 1) as f64;
    for i in 0..d {
        for j in 0..=i {
            let v = cov[(i, j)] * scale_factor;
            cov[(i, j)] = v;
            cov[(j, i)] = v;
        }
    }

    match ProposalDensity::new(mean.clone(), cov.clone(), dof) {
        Err(Error::NotPositiveDefinite) => {
            for i in 0..d {
                cov[(i, i)] += 1e-10;
            }
            ProposalDensity::new(mean, cov, dof).map_err(|e| match e {
                Error::NotPositiveDefinite => Error::RankDeficient,
                other => other,
            })
        }
        other => other,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn unit(dof: f64) -> StudentT {
        StudentT::new(vec![0.0], DMatrix::identity(1, 1), dof).unwrap()
    }

    #[test]
    fn gaussian_limit() {
        let lp = unit(1e6).logpdf(&[0.0]);
        assert_abs_diff_eq!(lp, -0.918_938_533_204_672_7, epsilon = 1e-3);
    }

    #[test]
    fn cauchy_at_origin() {
        // Standard Cauchy density at 0 is 1/pi.
        assert_abs_diff_eq!(unit(1.0).logpdf(&[0.0]), -1.144_729_885_849_400_2, epsilon = 1e-12);
    }

    #[test]
    fn one_dimensional_matches_closed_form() {
        // Univariate t with location 1, scale^2 = 4, nu = 5 at x = 2.5.
        let t = StudentT::new(vec![1.0], DMatrix::from_element(1, 1, 4.0), 5.0).unwrap();
        let (nu, s, z) = (5.0_f64, 2.0_f64, (2.5 - 1.0) / 2.0);
        let expected = ln_gamma(3.0) - ln_gamma(2.5) - 0.5 * (nu * PI).ln() - s.ln()
            - 3.0 * (1.0 + z * z / nu).ln();
        assert_abs_diff_eq!(t.logpdf(&[2.5]), expected, epsilon = 1e-12);
    }

    #[test]
    fn maximal_at_location() {
        let scale = DMatrix::from_row_slice(2, 2, &[2.0, 0.3, 0.3, 0.5]);
        let t = StudentT::new(vec![1.0, -1.0], scale, 4.0).unwrap();
        let peak = t.logpdf(&[1.0, -1.0]);
        for dx in [-0.1, 0.05, 1.0] {
            for dy in [-0.2, 0.01, 0.3] {
                assert!(t.logpdf(&[1.0 + dx, -1.0 + dy]) < peak);
            }
        }
    }

    #[test]
    fn rejects_bad_scale() {
        let not_pd = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(matches!(
            StudentT::new(vec![0.0, 0.0], not_pd, 5.0),
            Err(Error::NotPositiveDefinite)
        ));
        let asym = DMatrix::from_row_slice(2, 2, &[1.0, 0.1, 0.0, 1.0]);
        assert!(StudentT::new(vec![0.0, 0.0], asym, 5.0).is_err());
        assert!(ProposalDensity::new(vec![0.0], DMatrix::identity(1, 1), 2.0).is_err());
        assert!(student_t_logpdf(&[0.0, 1.0], &unit(3.0)).is_err());
    }

    #[test]
    fn same_rng_state_same_draw() {
        let t = unit(10.0);
        let a = t.sample(&mut ChaCha20Rng::seed_from_u64(5));
        let b = t.sample(&mut ChaCha20Rng::seed_from_u64(5));
        assert_eq!(a, b);
    }

    #[test]
    fn fit_rejects_constant_pilot() {
        let pilot = vec![vec![1.0, 2.0, 3.0]; 50];
        assert!(matches!(fit_proposal(&pilot, 10.0, 1.2), Err(Error::ZeroScatter)));
    }

    #[test]
    fn fit_needs_enough_draws() {
        let pilot = vec![vec![1.0, 2.0], vec![2.0, 1.0], vec![0.0, 0.0]];
        assert!(matches!(fit_proposal(&pilot, 10.0, 1.0), Err(Error::TooShort { .. })));
    }

    #[test]
    fn inflation_scales_exactly() {
        let pilot: Vec<Vec<f64>> = (0..20)
            .map(|i| {
                let x = i as f64;
                vec![x.sin(), (0.7 * x).cos() + 0.1 * x]
            })
            .collect();
        let a = fit_proposal(&pilot, 10.0, 1.0).unwrap();
        let b = fit_proposal(&pilot, 10.0, 1.2).unwrap();
        assert_eq!(a.location(), b.location());
        for (x, y) in a.scale().iter().zip(b.scale().iter()) {
            assert_abs_diff_eq!(y / x, 1.44, epsilon = 1e-12);
        }
    }

    #[test]
    fn constant_column_gets_jitter() {
        let pilot: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64, 3.0]).collect();
        let q = fit_proposal(&pilot, 10.0, 1.0).unwrap();
        assert_abs_diff_eq!(q.scale()[(1, 1)], 1e-10, epsilon = 1e-20);
    }

    #[test]
    fn fingerprint_tracks_changes() {
        let t = unit(10.0);
        assert_eq!(t.fingerprint(), t.clone().fingerprint());
        assert_ne!(t.fingerprint(), t.recentered(&[0.5]).fingerprint());
    }
}
