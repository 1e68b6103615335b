//! Named, reproducible experiment configurations.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::exec;
use crate::fields::{Boundary, Grid, ScalarField};
use crate::measures::AnalysisParams;
use crate::phasefield::{
    build_discrete_layer, build_layer_stack, build_radial_layer, manufactured_forcing, solve_stationary, LayerSpec,
    PhaseFieldState,
};

/// Coarsest admissible spacing, as a fraction of `ε`.
pub const MAX_H_OVER_EPS: f64 = 0.25;

/// Grid spacing rule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Resolution {
    /// `h ≤ ε / k`.
    PerEpsilon(f64),
    /// The same `h` for every `ε`.
    Fixed(f64),
    /// `h ≤ c·ε^p`. With `p > 1` the ratio `h/ε` shrinks along with `ε`.
    PowerLaw { coefficient: f64, exponent: f64 },
}

impl Resolution {
    fn spacing(self, epsilon: f64) -> f64 {
        match self {
            Resolution::PerEpsilon(k) => epsilon / k,
            Resolution::Fixed(h) => h,
            Resolution::PowerLaw { coefficient, exponent } => coefficient * epsilon.powf(exponent),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Profile {
    /// `u ≡ value`, forcing `−W′(value)/ε`.
    Constant { value: f64 },
    /// One flat layer through the node plane `x_axis = position`, built from
    /// the discrete heteroclinic, so its forcing vanishes to rounding.
    Planar { axis: usize, position: f64 },
    /// Alternating `tanh` layers normal to `axis`.
    Stack { axis: usize, positions: Vec<f64> },
    /// `tanh((|x − c| − R)/ε)`.
    Radial { center: [f64; 3], radius: f64 },
    /// Forcing of the radial profile; `u` is recovered by the stationary
    /// solver from the profile plus seeded uniform noise of size `noise`.
    SolvedRadial { center: [f64; 3], radius: f64, noise: f64, tol: f64, max_iter: usize },
}

impl Profile {
    pub fn kind(&self) -> &'static str {
        match self {
            Profile::Constant { .. } => "constant",
            Profile::Planar { .. } => "planar",
            Profile::Stack { .. } => "stack",
            Profile::Radial { .. } => "radial",
            Profile::SolvedRadial { .. } => "solved-radial",
        }
    }

    /// Whether `(u, f)` is exact by construction.
    pub fn is_manufactured(&self) -> bool {
        !matches!(self, Profile::SolvedRadial { .. })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub boundary: Boundary,
    pub epsilons: Vec<f64>,
    pub resolution: Resolution,
    pub profile: Profile,
    pub params: AnalysisParams,
    /// Seed for noise and pseudo-random test vector fields.
    pub seed: u64,
}

impl Scenario {
    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    /// Same scenario with another `ε` list.
    pub fn with_epsilons(mut self, epsilons: Vec<f64>) -> Self {
        self.epsilons = epsilons;
        self
    }

    pub fn grid(&self, epsilon: f64) -> Result<Grid> {
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(Error::arg(format!("epsilon = {epsilon} must be positive")));
        }
        let h = self.resolution.spacing(epsilon);
        if !(h > 0.0) {
            return Err(Error::arg(format!("spacing {h} must be positive")));
        }
        let g = Grid::with_max_spacing(&self.lower, &self.upper, h, self.boundary)?;
        if g.h() > MAX_H_OVER_EPS * epsilon * (1.0 + 1e-12) {
            return Err(Error::arg(format!("h = {} exceeds epsilon/4 = {}", g.h(), epsilon / 4.0)));
        }
        Ok(g)
    }

    /// Structural checks that need no field construction.
    pub fn validate(&self) -> Result<()> {
        self.context(self.validate_inner())
    }

    fn validate_inner(&self) -> Result<()> {
        let dim = self.dim();
        if !(1..=3).contains(&dim) || self.upper.len() != dim {
            return Err(Error::arg("domain must have 1 to 3 axes with matching bounds"));
        }
        if self.epsilons.is_empty() {
            return Err(Error::arg("no epsilon given"));
        }
        self.params.validate(dim)?;
        for &eps in &self.epsilons {
            self.grid(eps)?;
        }
        match &self.profile {
            Profile::Planar { axis, .. } | Profile::Stack { axis, .. } if *axis >= dim => {
                Err(Error::arg(format!("layer axis {axis} out of range")))
            }
            Profile::SolvedRadial { noise, tol, .. } if !(*noise >= 0.0 && *tol > 0.0) => {
                Err(Error::arg("noise must be nonnegative and tol positive"))
            }
            _ => Ok(()),
        }
    }

    fn context<T>(&self, r: Result<T>) -> Result<T> {
        r.map_err(|e| Error::Scenario { name: self.name.clone(), source: Box::new(e) })
    }

    fn build_one(&self, epsilon: f64) -> Result<PhaseFieldState> {
        let g = self.grid(epsilon)?;
        match &self.profile {
            Profile::Constant { value } => PhaseFieldState::manufactured(ScalarField::constant(g, *value), epsilon),
            Profile::Planar { axis, position } => {
                PhaseFieldState::manufactured(build_discrete_layer(g, epsilon, *axis, *position)?, epsilon)
            }
            Profile::Stack { axis, positions } => {
                let spec = LayerSpec::new(*axis, positions.clone());
                PhaseFieldState::manufactured(build_layer_stack(g, epsilon, &spec)?, epsilon)
            }
            Profile::Radial { center, radius } => {
                PhaseFieldState::manufactured(build_radial_layer(g, epsilon, *center, *radius)?, epsilon)
            }
            Profile::SolvedRadial { center, radius, noise, tol, max_iter } => {
                let exact = build_radial_layer(g, epsilon, *center, *radius)?;
                let f = manufactured_forcing(&exact, epsilon)?;
                let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
                let init: Vec<f64> =
                    exact.values().iter().map(|v| v + noise * rng.gen_range(-1.0..=1.0)).collect();
                solve_stationary(epsilon, &f, &ScalarField::new(g, init)?, *tol, *max_iter)
            }
        }
    }

    /// One state per `ε`, in list order.
    pub fn build(&self) -> Result<Vec<PhaseFieldState>> {
        self.validate()?;
        exec::map(self.epsilons.len(), |k| self.build_one(self.epsilons[k]))
            .into_iter()
            .map(|r| self.context(r))
            .collect()
    }
}

fn square(dim: usize, half: f64) -> (Vec<f64>, Vec<f64>) {
    (vec![-half; dim], vec![half; dim])
}

fn base(name: &str, dim: usize, epsilons: Vec<f64>, per_eps: f64, profile: Profile) -> Scenario {
    let (lower, upper) = square(dim, 1.0);
    Scenario {
        name: name.to_string(),
        lower,
        upper,
        boundary: Boundary::ZeroFlux,
        epsilons,
        resolution: Resolution::PerEpsilon(per_eps),
        profile,
        params: AnalysisParams::new(dim),
        seed: 1,
    }
}

/// Names of the standard corpus, in listing order.
pub const CORPUS: [&str; 12] = [
    "planar-1",
    "planar-1-1d",
    "stack-2",
    "stack-2-1d",
    "stack-3",
    "stack-3-1d",
    "circle",
    "circle-sweep",
    "sphere",
    "constant-zero",
    "constant-one",
    "solved-circle",
];

/// Looks up a corpus scenario by name.
pub fn standard(name: &str) -> Option<Scenario> {
    let planar = Profile::Planar { axis: 0, position: 0.0 };
    // Stacks are layered along the last axis, so sheets are parallel to the
    // slab planes; the single planar layer crosses them.
    let two = |dim: usize| Profile::Stack { axis: dim - 1, positions: vec![-0.25, 0.25] };
    let three = |dim: usize| Profile::Stack { axis: dim - 1, positions: vec![-0.5, 0.0, 0.5] };
    let circle = Profile::Radial { center: [0.0; 3], radius: 0.5 };
    Some(match name {
        "planar-1" => base(name, 2, vec![0.05], 8.0, planar),
        "planar-1-1d" => base(name, 1, vec![0.05, 0.025], 8.0, planar),
        "stack-2" => base(name, 2, vec![0.05, 0.025], 8.0, two(2)),
        "stack-2-1d" => base(name, 1, vec![0.05, 0.025], 8.0, two(1)),
        "stack-3" => base(name, 2, vec![0.05, 0.025], 8.0, three(2)),
        "stack-3-1d" => base(name, 1, vec![0.05, 0.025], 8.0, three(1)),
        "circle" => base(name, 2, vec![0.05], 8.0, circle),
        "circle-sweep" => Scenario {
            // h = ε/8 at ε = 0.1, refining to ε/16 at ε = 0.025.
            resolution: Resolution::PowerLaw { coefficient: 0.0125 / 0.1f64.powf(1.5), exponent: 1.5 },
            ..base(name, 2, vec![0.1, 0.05, 0.025], 8.0, circle)
        },
        "sphere" => base(name, 3, vec![0.1], 4.0, Profile::Radial { center: [0.0; 3], radius: 0.4 }),
        "constant-zero" => base(name, 2, vec![0.05], 8.0, Profile::Constant { value: 0.0 }),
        "constant-one" => base(name, 2, vec![0.05], 8.0, Profile::Constant { value: 1.0 }),
        "solved-circle" => base(
            name,
            2,
            vec![0.05],
            8.0,
            Profile::SolvedRadial { center: [0.0; 3], radius: 0.5, noise: 0.01, tol: 1e-10, max_iter: 50 },
        ),
        _ => return None,
    })
}

/// The whole standard corpus.
pub fn corpus() -> Vec<Scenario> {
    CORPUS.iter().filter_map(|n| standard(n)).collect()
}
