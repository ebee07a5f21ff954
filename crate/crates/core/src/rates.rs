//! Secret key rates of the encoded repeater.
//!
//! Bell-diagonal final states give the six-state secret fraction `r_inf`;
//! fiber loss and the waiting time for `3(r+1)` elementary pairs give the
//! repeater rate `R`; the key rate per memory is `K = R max(r_inf, 0) / M`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Geometric};

use crate::channels::{NoiseParams, SourceParams};
use crate::decode::{final_coeffs, final_coeffs_unswapped};
use crate::encgen::{encoded_pair, EncodedPair};
use crate::encswap::SwapModel;
use crate::error::{check_probability, check_range, Error, Result};
use crate::qstate::BellDiagCoeffs;

/// Memories per half node for the three-qubit code (`M = 6`).
pub const MEMORIES_PER_HALF_NODE: f64 = 6.0;
/// Fiber attenuation in dB/km.
pub const DEFAULT_ALPHA_DB_PER_KM: f64 = 0.17;
/// Signal speed in the fiber in km/s.
pub const DEFAULT_SPEED_KM_PER_S: f64 = 2.0e5;
/// Largest supported nesting level (1023 stations).
pub const MAX_NESTING: u32 = 20;
/// Bisection tolerance for thresholds.
pub const THRESHOLD_TOL: f64 = 1e-4;

/// Quantum bit error rates of a Bell-diagonal pair in the three bases.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ErrorRates {
    pub e_x: f64,
    pub e_y: f64,
    pub e_z: f64,
}

pub fn error_rates(c: &BellDiagCoeffs) -> ErrorRates {
    ErrorRates {
        e_x: c.phi_minus + c.psi_minus,
        e_y: c.phi_minus + c.psi_plus,
        e_z: c.psi_plus + c.psi_minus,
    }
}

/// Binary Shannon entropy in bits; NaN outside `[0, 1]` (up to round-off).
pub fn binary_entropy(p: f64) -> f64 {
    const SLACK: f64 = 1e-12;
    if !(-SLACK..=1.0 + SLACK).contains(&p) {
        return f64::NAN;
    }
    let p = p.clamp(0.0, 1.0);
    if p == 0.0 || p == 1.0 {
        return 0.0;
    }
    -p * p.log2() - (1.0 - p) * (1.0 - p).log2()
}

/// Six-state secret fraction without clamping; `-inf` where the formula is undefined.
pub fn secret_fraction_raw(e: ErrorRates) -> f64 {
    let ErrorRates { e_x, e_y, e_z } = e;
    let first = if e_z > 0.0 {
        e_z * binary_entropy((1.0 + (e_x - e_y) / e_z) / 2.0)
    } else {
        0.0
    };
    let second = if e_z < 1.0 {
        (1.0 - e_z) * binary_entropy((1.0 - (e_x + e_y + e_z) / 2.0) / (1.0 - e_z))
    } else {
        0.0
    };
    let r = 1.0 - first - second - binary_entropy(e_z);
    if r.is_nan() {
        f64::NEG_INFINITY
    } else {
        r
    }
}

/// Six-state secret fraction clamped at zero.
pub fn secret_fraction_six_state(e: ErrorRates) -> f64 {
    secret_fraction_raw(e).max(0.0)
}

/// `P0 = 10^(-alpha L0 / 10)`.
pub fn transmission_prob(l0_km: f64, alpha_db_per_km: f64) -> Result<f64> {
    check_range("L0", l0_km, 0.0, f64::INFINITY, "[0, inf)")?;
    check_range("alpha", alpha_db_per_km, 0.0, f64::INFINITY, "[0, inf)")?;
    Ok(10f64.powf(-alpha_db_per_km * l0_km / 10.0))
}

fn check_transmission(n: u64, p0: f64) -> Result<()> {
    if n == 0 {
        return Err(Error::ParameterOutOfRange {
            name: "N",
            value: 0.0,
            range: "N >= 1",
        });
    }
    if p0 == 0.0 {
        return Err(Error::ZeroTransmission(p0));
    }
    check_probability("P0", p0)?;
    Ok(())
}

/// Expected number of rounds until `n` independent links with success probability `p0` have all succeeded.
///
/// Uses `sum_{k>=0} [1 - (1 - q^k)^n]` with `q = 1 - p0` for `p0 >= 0.01`, and the
/// Euler-Maclaurin form `H_n / lambda + 1/2`, `lambda = -ln q`, below that.
pub fn z_n(n: u64, p0: f64) -> Result<f64> {
    check_transmission(n, p0)?;
    if n == 1 {
        return Ok(1.0 / p0);
    }
    if p0 == 1.0 {
        return Ok(1.0);
    }
    if p0 >= 0.01 {
        Ok(z_n_series(n, p0))
    } else {
        let lambda = -(-p0).ln_1p();
        Ok(harmonic(n) / lambda + 0.5)
    }
}

fn harmonic(n: u64) -> f64 {
    // summed from the small end
    (1..=n).rev().map(|j| 1.0 / j as f64).sum()
}

fn z_n_series(n: u64, p0: f64) -> f64 {
    let q = 1.0 - p0;
    let nf = n as f64;
    let mut sum = 1.0; // k = 0
    let mut qk = 1.0;
    loop {
        qk *= q;
        let term = -(nf * (-qk).ln_1p()).exp_m1();
        sum += term;
        if term < 1e-17 * sum {
            return sum;
        }
    }
}

/// The alternating binomial sum, exact in exact arithmetic but unstable beyond small `n`.
pub fn z_n_alternating(n: u64, p0: f64) -> Result<f64> {
    check_transmission(n, p0)?;
    let mut binom = 1.0;
    let mut sum = 0.0;
    for j in 1..=n {
        binom *= (n - j + 1) as f64 / j as f64;
        let sign = if j % 2 == 1 { 1.0 } else { -1.0 };
        sum += sign * binom / -(j as f64 * (-p0).ln_1p()).exp_m1();
    }
    Ok(sum)
}

/// Sample mean and its standard error.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MonteCarloEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub trials: u64,
}

impl MonteCarloEstimate {
    /// Deviation of `value` from the mean in standard errors.
    pub fn sigmas(&self, value: f64) -> f64 {
        (value - self.mean).abs() / self.std_error
    }
}

/// Mean of the maximum of `n` geometric waits (support `1, 2, ...`), from a seeded ChaCha8 stream.
pub fn z_n_monte_carlo(n: u64, p0: f64, trials: u64, seed: u64) -> Result<MonteCarloEstimate> {
    check_transmission(n, p0)?;
    if trials < 2 {
        return Err(Error::ParameterOutOfRange {
            name: "trials",
            value: trials as f64,
            range: "trials >= 2",
        });
    }
    let geo = Geometric::new(p0).map_err(|_| Error::ParameterOutOfRange {
        name: "P0",
        value: p0,
        range: "(0, 1]",
    })?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut sum, mut sum_sq) = (0.0f64, 0.0f64);
    for _ in 0..trials {
        let worst = (0..n).map(|_| geo.sample(&mut rng)).max().unwrap_or(0) + 1;
        let x = worst as f64;
        sum += x;
        sum_sq += x * x;
    }
    let t = trials as f64;
    let mean = sum / t;
    let var = (sum_sq - t * mean * mean) / (t - 1.0);
    Ok(MonteCarloEstimate {
        mean,
        std_error: (var.max(0.0) / t).sqrt(),
        trials,
    })
}

/// Elementary pairs per segment in the encoded scheme.
const PAIRS_PER_SEGMENT: u64 = 3;

/// Time unit of one elementary attempt.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum T0Mode {
    /// `T0 = L0 / c`.
    Physical,
    /// A fixed `T0`, e.g. 1 for rates in units of attempts.
    Fixed(f64),
}

/// How the number of swaps entering `P_r` and `rho_s(r)` is counted.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum SwapExponent {
    /// One swap per station, `r = 2^N - 1`.
    #[default]
    Stations,
    /// One per nesting level, `N`.
    NestingLevel,
}

impl SwapExponent {
    pub fn exponent(self, nesting: u32) -> u32 {
        match self {
            SwapExponent::Stations => stations(nesting) as u32,
            SwapExponent::NestingLevel => nesting,
        }
    }
}

/// `r = 2^N - 1`.
pub fn stations(nesting: u32) -> u64 {
    (1u64 << nesting) - 1
}

/// Inverse of [`stations`]; rejects counts not of the form `2^N - 1`.
pub fn nesting_from_stations(r: u64) -> Result<u32> {
    let segments = r.checked_add(1).ok_or(Error::NotStationCount(r))?;
    if !segments.is_power_of_two() || segments.trailing_zeros() > MAX_NESTING {
        return Err(Error::NotStationCount(r));
    }
    Ok(segments.trailing_zeros())
}

/// Fiber and timing parameters shared by all parameter points.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LinkParams {
    pub alpha_db_per_km: f64,
    pub speed_km_per_s: f64,
    pub t0: T0Mode,
    pub exponent: SwapExponent,
}

impl Default for LinkParams {
    fn default() -> Self {
        Self {
            alpha_db_per_km: DEFAULT_ALPHA_DB_PER_KM,
            speed_km_per_s: DEFAULT_SPEED_KM_PER_S,
            t0: T0Mode::Physical,
            exponent: SwapExponent::Stations,
        }
    }
}

impl LinkParams {
    pub fn validate(&self) -> Result<()> {
        let positive = |name, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::ParameterOutOfRange {
                    name,
                    value: v,
                    range: "(0, inf)",
                })
            }
        };
        positive("alpha", self.alpha_db_per_km)?;
        positive("speed", self.speed_km_per_s)?;
        if let T0Mode::Fixed(t0) = self.t0 {
            positive("T0", t0)?;
        }
        Ok(())
    }

    pub fn t0(&self, l0_km: f64) -> f64 {
        match self.t0 {
            T0Mode::Physical => l0_km / self.speed_km_per_s,
            T0Mode::Fixed(t) => t,
        }
    }
}

/// Segment length, transmission and waiting-time figures of one chain.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChainTiming {
    pub l0_km: f64,
    pub p0: f64,
    pub z: f64,
    /// Repeater rate in pairs per time unit of `T0`.
    pub rate: f64,
}

fn check_distance(distance_km: f64) -> Result<f64> {
    if distance_km.is_finite() && distance_km > 0.0 {
        Ok(distance_km)
    } else {
        Err(Error::ParameterOutOfRange {
            name: "distance",
            value: distance_km,
            range: "(0, inf)",
        })
    }
}

fn check_nesting(nesting: u32) -> Result<u32> {
    if nesting > MAX_NESTING {
        return Err(Error::ParameterOutOfRange {
            name: "N",
            value: f64::from(nesting),
            range: "[0, 20]",
        });
    }
    Ok(nesting)
}

/// `R = 1 / (2 T0 Z_{3(r+1)}(P0))` with equal spacing `L0 = L / (r+1)`; zero once `P0` underflows.
pub fn repeater_rate_qec(distance_km: f64, nesting: u32, link: &LinkParams) -> Result<ChainTiming> {
    let distance_km = check_distance(distance_km)?;
    let nesting = check_nesting(nesting)?;
    link.validate()?;
    let segments = stations(nesting) + 1;
    let l0_km = distance_km / segments as f64;
    let p0 = transmission_prob(l0_km, link.alpha_db_per_km)?;
    if p0 == 0.0 {
        return Ok(ChainTiming {
            l0_km,
            p0,
            z: f64::INFINITY,
            rate: 0.0,
        });
    }
    let z = z_n(PAIRS_PER_SEGMENT * segments, p0)?;
    Ok(ChainTiming {
        l0_km,
        p0,
        z,
        rate: 1.0 / (2.0 * link.t0(l0_km) * z),
    })
}

/// `R = m P0 / L0`, the estimate for unlimited memories; comparison only.
pub fn jiang_rate(m: f64, p0: f64, l0_km: f64) -> Result<f64> {
    check_range("m", m, 0.0, f64::INFINITY, "[0, inf)")?;
    check_probability("P0", p0)?;
    check_distance(l0_km)?;
    Ok(m * p0 / l0_km)
}

/// Everything computed for one `(beta, F0, L, N)` point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RateReport {
    pub nesting: u32,
    pub stations: u64,
    /// Exponent used for `P_r` and `rho_s(r)`; 0 for a single link.
    pub swaps: u32,
    pub l0_km: f64,
    pub p0: f64,
    pub z: f64,
    pub rate: f64,
    pub errors: ErrorRates,
    /// Unclamped secret fraction.
    pub r_inf: f64,
    pub key_rate: f64,
    pub memories: f64,
    pub p_s: f64,
    pub p_r: f64,
    pub coeffs: BellDiagCoeffs,
}

/// Pipeline results that depend only on `(beta, F0)`, reused across distances and nesting levels.
#[derive(Clone, Debug)]
pub struct RateModel {
    enc: EncodedPair,
    swap: SwapModel,
}

/// Final-state figures for one nesting level.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FinalFigures {
    pub swaps: u32,
    pub p_r: f64,
    pub coeffs: BellDiagCoeffs,
    pub errors: ErrorRates,
    pub r_inf: f64,
}

impl RateModel {
    pub fn new(beta: f64, f0: f64) -> Result<Self> {
        let beta = NoiseParams::new(beta)?.beta();
        let f0 = SourceParams::new(f0)?.f0();
        let enc = encoded_pair(beta, f0)?;
        let swap = SwapModel::from_encoded(&enc)?;
        Ok(Self { enc, swap })
    }

    pub fn beta(&self) -> f64 {
        self.swap.beta
    }

    pub fn f0(&self) -> f64 {
        self.swap.f0
    }

    pub fn p_s(&self) -> f64 {
        self.swap.p_s
    }

    pub fn encoded(&self) -> &EncodedPair {
        &self.enc
    }

    /// Final-state figures at nesting level `nesting`; `N = 0` decodes a single link.
    pub fn final_figures(&self, nesting: u32, exponent: SwapExponent) -> Result<FinalFigures> {
        check_nesting(nesting)?;
        let (swaps, p_r, coeffs) = if nesting == 0 {
            (0, 1.0, final_coeffs_unswapped(&self.enc)?)
        } else {
            let swaps = exponent.exponent(nesting);
            (
                swaps,
                self.swap.chain_success(swaps)?,
                final_coeffs(&self.swap, swaps)?,
            )
        };
        let errors = error_rates(&coeffs);
        Ok(FinalFigures {
            swaps,
            p_r,
            coeffs,
            errors,
            r_inf: secret_fraction_raw(errors),
        })
    }

    pub fn report(&self, distance_km: f64, nesting: u32, link: &LinkParams) -> Result<RateReport> {
        let timing = repeater_rate_qec(distance_km, nesting, link)?;
        let fig = self.final_figures(nesting, link.exponent)?;
        Ok(RateReport {
            nesting,
            stations: stations(nesting),
            swaps: fig.swaps,
            l0_km: timing.l0_km,
            p0: timing.p0,
            z: timing.z,
            rate: timing.rate,
            errors: fig.errors,
            r_inf: fig.r_inf,
            key_rate: timing.rate * fig.r_inf.max(0.0) / MEMORIES_PER_HALF_NODE,
            memories: MEMORIES_PER_HALF_NODE,
            p_s: self.swap.p_s,
            p_r: fig.p_r,
            coeffs: fig.coeffs,
        })
    }
}

/// Full point evaluation; see [`RateModel`] for repeated use.
pub fn key_rate(
    beta: f64,
    f0: f64,
    distance_km: f64,
    nesting: u32,
    link: &LinkParams,
) -> Result<RateReport> {
    RateModel::new(beta, f0)?.report(distance_km, nesting, link)
}

/// Inclusive range of nesting levels.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct NestingRange {
    pub min: u32,
    pub max: u32,
}

impl NestingRange {
    pub fn new(min: u32, max: u32) -> Result<Self> {
        if min > max {
            return Err(Error::EmptyNestingRange);
        }
        check_nesting(max)?;
        Ok(Self { min, max })
    }

    pub fn iter(self) -> std::ops::RangeInclusive<u32> {
        self.min..=self.max
    }
}

impl Default for NestingRange {
    /// `1..=10`; `N = 0` (a single link) is opt-in.
    fn default() -> Self {
        Self { min: 1, max: 10 }
    }
}

/// Rate, secret fraction and memory count of an arbitrary repeater scheme.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SchemeFigures {
    pub rate: f64,
    pub r_inf: f64,
    pub memories: f64,
}

impl SchemeFigures {
    pub fn key_rate(&self) -> f64 {
        self.rate * self.r_inf.max(0.0) / self.memories
    }
}

/// Anything that yields `(R, r_inf, M)` per distance and nesting level.
pub trait RepeaterScheme {
    fn figures(&self, distance_km: f64, nesting: u32) -> Result<SchemeFigures>;
}

/// The encoded repeater as a [`RepeaterScheme`].
#[derive(Clone, Debug)]
pub struct EncodedRepeater {
    pub model: RateModel,
    pub link: LinkParams,
}

impl RepeaterScheme for EncodedRepeater {
    fn figures(&self, distance_km: f64, nesting: u32) -> Result<SchemeFigures> {
        let r = self.model.report(distance_km, nesting, &self.link)?;
        Ok(SchemeFigures {
            rate: r.rate,
            r_inf: r.r_inf,
            memories: r.memories,
        })
    }
}

/// A scheme defined by an external function, e.g. tabulated figures of another protocol.
pub struct ExternalScheme<F>(pub F);

impl<F> RepeaterScheme for ExternalScheme<F>
where
    F: Fn(f64, u32) -> Result<SchemeFigures>,
{
    fn figures(&self, distance_km: f64, nesting: u32) -> Result<SchemeFigures> {
        (self.0)(distance_km, nesting)
    }
}

/// Nesting level maximizing `K`; ties go to the smaller `N`.
pub fn optimize_over_stations(
    model: &RateModel,
    distance_km: f64,
    range: NestingRange,
    link: &LinkParams,
) -> Result<RateReport> {
    let mut best: Option<RateReport> = None;
    for n in range.iter() {
        let r = model.report(distance_km, n, link)?;
        if best.is_none_or(|b| r.key_rate > b.key_rate) {
            best = Some(r);
        }
    }
    best.ok_or(Error::EmptyNestingRange)
}

/// Memory cost at the best nesting level.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CostPoint {
    /// `min_N 2^(N+1) / K(N)`.
    pub cost: f64,
    /// `cost / L`.
    pub cost_per_km: f64,
    pub nesting: u32,
    pub l0_km: f64,
    pub key_rate: f64,
}

/// Cost coefficient of any scheme; `None` if no nesting level yields a key.
pub fn cost_coefficient_for(
    scheme: &dyn RepeaterScheme,
    distance_km: f64,
    range: NestingRange,
) -> Result<Option<CostPoint>> {
    let distance_km = check_distance(distance_km)?;
    let mut best: Option<CostPoint> = None;
    for n in range.iter() {
        let k = scheme.figures(distance_km, n)?.key_rate();
        if k <= 0.0 {
            continue;
        }
        let cost = 2f64.powi(n as i32 + 1) / k;
        if best.is_none_or(|b| cost < b.cost) {
            best = Some(CostPoint {
                cost,
                cost_per_km: cost / distance_km,
                nesting: n,
                l0_km: distance_km / (stations(n) + 1) as f64,
                key_rate: k,
            });
        }
    }
    Ok(best)
}

pub fn cost_coefficient(
    model: &RateModel,
    distance_km: f64,
    range: NestingRange,
    link: &LinkParams,
) -> Result<Option<CostPoint>> {
    let scheme = EncodedRepeater {
        model: model.clone(),
        link: *link,
    };
    cost_coefficient_for(&scheme, distance_km, range)
}

/// Bisection for the sign change of `f` on `[lo, hi]`, to absolute tolerance `tol`.
///
/// `f(lo)` and `f(hi)` must have opposite signs (`> 0` versus `<= 0`).
pub fn bisect_sign<F>(mut f: F, lo: f64, hi: f64, tol: f64) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    let (mut a, mut b) = (lo, hi);
    let positive_at_a = f(a)? > 0.0;
    if positive_at_a == (f(b)? > 0.0) {
        return Err(Error::NoThresholdInBracket { lo, hi });
    }
    while b - a > tol {
        let mid = 0.5 * (a + b);
        if (f(mid)? > 0.0) == positive_at_a {
            a = mid;
        } else {
            b = mid;
        }
    }
    Ok(0.5 * (a + b))
}

/// Search brackets for the threshold bisections.
pub const BETA_BRACKET: (f64, f64) = (0.0, 0.05);
pub const F0_BRACKET: (f64, f64) = (0.9, 1.0);

/// Largest gate error with a positive secret fraction at `nesting` (perfect source).
pub fn threshold_beta(nesting: u32, exponent: SwapExponent, tol: f64) -> Result<f64> {
    let (lo, hi) = BETA_BRACKET;
    bisect_sign(
        |b| Ok(RateModel::new(b, 1.0)?.final_figures(nesting, exponent)?.r_inf),
        lo,
        hi,
        tol,
    )
}

/// Minimal gate quality `1 - beta*` for `r` stations.
pub fn threshold_gate_quality(r: u64, exponent: SwapExponent) -> Result<f64> {
    Ok(1.0 - threshold_beta(nesting_from_stations(r)?, exponent, THRESHOLD_TOL)?)
}

/// Smallest source fidelity with a positive secret fraction at `nesting` (perfect gates).
pub fn threshold_f0(nesting: u32, exponent: SwapExponent, tol: f64) -> Result<f64> {
    let (lo, hi) = F0_BRACKET;
    bisect_sign(
        |f| Ok(RateModel::new(0.0, f)?.final_figures(nesting, exponent)?.r_inf),
        lo,
        hi,
        tol,
    )
}

/// Minimal source fidelity for `r` stations.
pub fn threshold_fidelity(r: u64, exponent: SwapExponent) -> Result<f64> {
    threshold_f0(nesting_from_stations(r)?, exponent, THRESHOLD_TOL)
}

/// Best unclamped secret fraction over the range among levels with a nonzero rate at `distance_km`.
fn best_secret_fraction(
    model: &RateModel,
    distance_km: f64,
    range: NestingRange,
    link: &LinkParams,
) -> Result<f64> {
    let mut best = f64::NEG_INFINITY;
    for n in range.iter() {
        let r = model.report(distance_km, n, link)?;
        if r.rate > 0.0 {
            best = best.max(r.r_inf);
        }
    }
    Ok(best)
}

/// Edge of the nonzero-key region in `beta` at fixed `f0`, optimizing over nesting levels.
pub fn key_boundary_beta(
    distance_km: f64,
    f0: f64,
    range: NestingRange,
    link: &LinkParams,
    tol: f64,
) -> Result<f64> {
    let (lo, hi) = BETA_BRACKET;
    bisect_sign(
        |b| best_secret_fraction(&RateModel::new(b, f0)?, distance_km, range, link),
        lo,
        hi,
        tol,
    )
}

/// Edge of the nonzero-key region in `F0` at fixed `beta`, optimizing over nesting levels.
pub fn key_boundary_f0(
    distance_km: f64,
    beta: f64,
    range: NestingRange,
    link: &LinkParams,
    tol: f64,
) -> Result<f64> {
    let (lo, hi) = F0_BRACKET;
    bisect_sign(
        |f| best_secret_fraction(&RateModel::new(beta, f)?, distance_km, range, link),
        lo,
        hi,
        tol,
    )
}
