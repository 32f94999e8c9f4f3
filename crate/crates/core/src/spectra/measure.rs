use crate::algebra::SelfAdjointOperator;
use crate::{Error, Result};

/// Locations closer than this are merged into one atom.
pub const ATOM_MERGE_TOL: f64 = 1e-9;
const WEIGHT_SUM_TOL: f64 = 1e-9;
const DENSITY_MASS_TOL: f64 = 1e-6;

/// Finitely many weighted atoms, sorted by location and merged.
#[derive(Clone, Debug, PartialEq)]
pub struct AtomicMeasure {
    locations: Vec<f64>,
    weights: Vec<f64>,
    cumulative: Vec<f64>,
}

/// Piecewise-linear density on a uniform grid.
#[derive(Clone, Debug, PartialEq)]
pub struct GriddedMeasure {
    start: f64,
    step: f64,
    density: Vec<f64>,
    cumulative: Vec<f64>,
}

/// A probability measure on the real line.
#[derive(Clone, Debug, PartialEq)]
pub enum SpectralMeasure {
    Atomic(AtomicMeasure),
    Gridded(GriddedMeasure),
}

impl AtomicMeasure {
    pub fn new(atoms: impl IntoIterator<Item = (f64, f64)>) -> Result<Self> {
        let mut atoms: Vec<(f64, f64)> = atoms.into_iter().collect();
        if atoms.is_empty() {
            return Err(Error::InvalidMeasure("no atoms".into()));
        }
        for &(x, w) in &atoms {
            if !x.is_finite() {
                return Err(Error::InvalidMeasure(format!("non-finite atom location {x}")));
            }
            if !(w >= 0.0 && w.is_finite()) {
                return Err(Error::InvalidMeasure(format!("invalid weight {w} at {x}")));
            }
        }
        let total: f64 = atoms.iter().map(|a| a.1).sum();
        if (total - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(Error::InvalidMeasure(format!("weights sum to {total}, expected 1")));
        }
        atoms.sort_by(|a, b| a.0.total_cmp(&b.0));

        let mut locations = Vec::with_capacity(atoms.len());
        let mut weights: Vec<f64> = Vec::with_capacity(atoms.len());
        let mut anchor = f64::NEG_INFINITY;
        let mut moment = 0.0;
        for (x, w) in atoms {
            if x - anchor <= ATOM_MERGE_TOL {
                let last = weights.len() - 1;
                weights[last] += w;
                moment += w * x;
                if weights[last] > 0.0 {
                    locations[last] = moment / weights[last];
                }
            } else {
                anchor = x;
                moment = w * x;
                locations.push(x);
                weights.push(w);
            }
        }
        let cumulative = weights
            .iter()
            .scan(0.0, |acc, &w| {
                *acc += w;
                Some(*acc)
            })
            .collect();
        Ok(Self { locations, weights, cumulative })
    }

    /// Equal weight `1/n` on every sample.
    pub fn from_samples(samples: &[f64]) -> Result<Self> {
        let w = 1.0 / samples.len().max(1) as f64;
        Self::new(samples.iter().map(|&x| (x, w)))
    }

    pub fn point_mass(x: f64) -> Self {
        Self { locations: vec![x], weights: vec![1.0], cumulative: vec![1.0] }
    }

    pub fn locations(&self) -> &[f64] {
        &self.locations
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn atoms(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.locations.iter().copied().zip(self.weights.iter().copied())
    }

    pub fn len(&self) -> usize {
        self.locations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.locations.is_empty()
    }

    pub fn cdf(&self, x: f64) -> f64 {
        let k = self.locations.partition_point(|&l| l <= x);
        if k == 0 {
            0.0
        } else {
            self.cumulative[k - 1].min(1.0)
        }
    }

    fn quantile(&self, p: f64) -> f64 {
        let k = self.cumulative.partition_point(|&c| c < p - 1e-15);
        self.locations[k.min(self.locations.len() - 1)]
    }
}

impl GriddedMeasure {
    /// Validates nonnegativity and unit trapezoid mass.
    pub fn new(start: f64, step: f64, density: Vec<f64>) -> Result<Self> {
        let m = Self::unchecked(start, step, density)?;
        let mass = *m.cumulative.last().unwrap();
        if (mass - 1.0).abs() > DENSITY_MASS_TOL {
            return Err(Error::InvalidMeasure(format!("density integrates to {mass}, expected 1")));
        }
        Ok(m)
    }

    /// Rescales `density` to unit trapezoid mass.
    pub fn normalized(start: f64, step: f64, density: Vec<f64>) -> Result<Self> {
        let m = Self::unchecked(start, step, density)?;
        let mass = *m.cumulative.last().unwrap();
        if !(mass > 0.0) {
            return Err(Error::InvalidMeasure("density has zero mass".into()));
        }
        let density = m.density.iter().map(|d| d / mass).collect();
        Self::unchecked(start, step, density)
    }

    /// Samples `f` on `points` nodes spanning `[lo, hi]` and normalizes.
    pub fn from_fn(lo: f64, hi: f64, points: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        if points < 2 || !(hi > lo) {
            return Err(Error::InvalidMeasure(format!("bad grid [{lo}, {hi}] with {points} points")));
        }
        let step = (hi - lo) / (points - 1) as f64;
        let density = (0..points).map(|i| f(lo + step * i as f64).max(0.0)).collect();
        Self::normalized(lo, step, density)
    }

    fn unchecked(start: f64, step: f64, density: Vec<f64>) -> Result<Self> {
        if density.len() < 2 {
            return Err(Error::InvalidMeasure("grid needs at least two points".into()));
        }
        if !(step > 0.0 && step.is_finite() && start.is_finite()) {
            return Err(Error::InvalidMeasure(format!("grid start {start} / step {step} invalid")));
        }
        if let Some(d) = density.iter().find(|d| !(**d >= 0.0 && d.is_finite())) {
            return Err(Error::InvalidMeasure(format!("invalid density value {d}")));
        }
        let mut cumulative = Vec::with_capacity(density.len());
        let mut acc = 0.0;
        cumulative.push(0.0);
        for w in density.windows(2) {
            acc += 0.5 * (w[0] + w[1]) * step;
            cumulative.push(acc);
        }
        Ok(Self { start, step, density, cumulative })
    }

    pub fn start(&self) -> f64 {
        self.start
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn end(&self) -> f64 {
        self.node(self.density.len() - 1)
    }

    pub fn density(&self) -> &[f64] {
        &self.density
    }

    pub fn len(&self) -> usize {
        self.density.len()
    }

    pub fn is_empty(&self) -> bool {
        self.density.is_empty()
    }

    pub fn node(&self, i: usize) -> f64 {
        self.start + self.step * i as f64
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.density.len()).map(|i| self.node(i))
    }

    /// Linear interpolation of the density; zero outside the grid.
    pub fn density_at(&self, x: f64) -> f64 {
        let t = (x - self.start) / self.step;
        if !(t >= 0.0) || t > (self.len() - 1) as f64 {
            return 0.0;
        }
        let k = (t.floor() as usize).min(self.len() - 2);
        let f = t - k as f64;
        self.density[k] * (1.0 - f) + self.density[k + 1] * f
    }

    pub fn cdf(&self, x: f64) -> f64 {
        let t = (x - self.start) / self.step;
        if !(t > 0.0) {
            return 0.0;
        }
        let last = self.len() - 1;
        if t >= last as f64 {
            return self.cumulative[last];
        }
        let k = (t.floor() as usize).min(last - 1);
        let u = (t - k as f64) * self.step;
        let (a, b) = (self.density[k], self.density[k + 1]);
        self.cumulative[k] + a * u + (b - a) * u * u / (2.0 * self.step)
    }

    fn quantile(&self, p: f64) -> f64 {
        let total = *self.cumulative.last().unwrap();
        let p = (p * total).clamp(0.0, total);
        let k = self.cumulative.partition_point(|&c| c < p).saturating_sub(1).min(self.len() - 2);
        let (a, b) = (self.density[k], self.density[k + 1]);
        let rem = p - self.cumulative[k];
        let h = self.step;
        // a u + (b - a) u^2 / (2h) = rem
        let slope = (b - a) / h;
        let u = if slope.abs() < 1e-300 {
            if a > 0.0 {
                rem / a
            } else {
                0.0
            }
        } else {
            let disc = (a * a + 2.0 * slope * rem).max(0.0);
            2.0 * rem / (a + disc.sqrt()).max(1e-300)
        };
        self.node(k) + u.clamp(0.0, h)
    }

    /// Moment `∫ x^k ρ(x) dx` with exact integration of the linear interpolant.
    fn raw_moment(&self, k: i32) -> f64 {
        // four-point Gauss-Legendre per cell: exact for k <= 6
        const NODES: [f64; 4] = [-0.861_136_311_594_053, -0.339_981_043_584_856, 0.339_981_043_584_856, 0.861_136_311_594_053];
        const WEIGHTS: [f64; 4] = [0.347_854_845_137_454, 0.652_145_154_862_546, 0.652_145_154_862_546, 0.347_854_845_137_454];
        let h = self.step;
        let mut acc = 0.0;
        for c in 0..self.len() - 1 {
            let (a, b) = (self.density[c], self.density[c + 1]);
            if a == 0.0 && b == 0.0 {
                continue;
            }
            let x0 = self.node(c);
            for (t, w) in NODES.iter().zip(WEIGHTS) {
                let s = 0.5 * (t + 1.0);
                let x = x0 + s * h;
                acc += 0.5 * h * w * (a + (b - a) * s) * x.powi(k);
            }
        }
        acc
    }
}

impl SpectralMeasure {
    pub fn point_mass(x: f64) -> Self {
        SpectralMeasure::Atomic(AtomicMeasure::point_mass(x))
    }

    pub fn atomic(atoms: impl IntoIterator<Item = (f64, f64)>) -> Result<Self> {
        AtomicMeasure::new(atoms).map(SpectralMeasure::Atomic)
    }

    pub fn from_samples(samples: &[f64]) -> Result<Self> {
        AtomicMeasure::from_samples(samples).map(SpectralMeasure::Atomic)
    }

    /// Semicircle law of the given variance on `[-2σ, 2σ]`, gridded.
    pub fn semicircle(variance: f64, points: usize) -> Result<Self> {
        if !(variance > 0.0) {
            return Err(Error::InvalidMeasure(format!("variance must be positive, got {variance}")));
        }
        let r = 2.0 * variance.sqrt();
        GriddedMeasure::from_fn(-r, r, points, |x| (r * r - x * x).max(0.0).sqrt()).map(SpectralMeasure::Gridded)
    }

    pub fn as_atomic(&self) -> Option<&AtomicMeasure> {
        match self {
            SpectralMeasure::Atomic(a) => Some(a),
            SpectralMeasure::Gridded(_) => None,
        }
    }

    pub fn as_gridded(&self) -> Option<&GriddedMeasure> {
        match self {
            SpectralMeasure::Gridded(g) => Some(g),
            SpectralMeasure::Atomic(_) => None,
        }
    }

    pub fn is_point_mass(&self) -> bool {
        matches!(self, SpectralMeasure::Atomic(a) if a.len() == 1)
    }

    pub fn cdf(&self, x: f64) -> f64 {
        match self {
            SpectralMeasure::Atomic(a) => a.cdf(x),
            SpectralMeasure::Gridded(g) => g.cdf(x),
        }
    }

    /// Generalized inverse CDF on `(0, 1]`.
    pub fn quantile(&self, p: f64) -> f64 {
        match self {
            SpectralMeasure::Atomic(a) => a.quantile(p),
            SpectralMeasure::Gridded(g) => g.quantile(p),
        }
    }

    /// `(min, max)` of the atoms or the grid.
    pub fn support(&self) -> (f64, f64) {
        match self {
            SpectralMeasure::Atomic(a) => (a.locations[0], *a.locations.last().unwrap()),
            SpectralMeasure::Gridded(g) => (g.start, g.end()),
        }
    }

    /// Breakpoints of the CDF: atom locations or grid nodes.
    pub fn breakpoints(&self) -> Vec<f64> {
        match self {
            SpectralMeasure::Atomic(a) => a.locations.clone(),
            SpectralMeasure::Gridded(g) => g.nodes().collect(),
        }
    }

    pub fn raw_moment(&self, k: i32) -> f64 {
        match self {
            SpectralMeasure::Atomic(a) => a.atoms().map(|(x, w)| w * x.powi(k)).sum(),
            SpectralMeasure::Gridded(g) => g.raw_moment(k),
        }
    }

    pub fn mean(&self) -> f64 {
        self.raw_moment(1)
    }

    pub fn variance(&self) -> f64 {
        let m = self.mean();
        match self {
            SpectralMeasure::Atomic(a) => a.atoms().map(|(x, w)| w * (x - m) * (x - m)).sum(),
            SpectralMeasure::Gridded(g) => (g.raw_moment(2) - m * m).max(0.0),
        }
    }

    /// Pushforward under `λ ↦ scale·λ + shift` with `scale > 0`.
    pub fn affine_pushforward(&self, scale: f64, shift: f64) -> Result<Self> {
        if !(scale > 0.0) {
            return Err(Error::InvalidArgument(format!("scale must be positive, got {scale}")));
        }
        Ok(match self {
            SpectralMeasure::Atomic(a) => {
                SpectralMeasure::Atomic(AtomicMeasure::new(a.atoms().map(|(x, w)| (scale * x + shift, w)))?)
            }
            SpectralMeasure::Gridded(g) => SpectralMeasure::Gridded(GriddedMeasure::unchecked(
                scale * g.start + shift,
                scale * g.step,
                g.density.iter().map(|d| d / scale).collect(),
            )?),
        })
    }

    /// `n` quantile points `F^{-1}((k + 1/2) / n)`, a deterministic
    /// diagonal realization of the measure in dimension `n`.
    pub fn quantile_points(&self, n: usize) -> Vec<f64> {
        (0..n).map(|k| self.quantile((k as f64 + 0.5) / n as f64)).collect()
    }
}

/// Empirical eigenvalue distribution, weight `1/dim` per eigenvalue.
pub fn spectral_measure(a: &SelfAdjointOperator) -> Result<SpectralMeasure> {
    SpectralMeasure::from_samples(&a.eigenvalues()?)
}
