//! End-to-end relay chains: per-hop budgets, waist optimization, relay-count
//! envelopes, and the platform-jitter Monte Carlo.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::atmosphere::{
    atmospheric_transmittance, path_moments, turbulence_moments, AttenuationProfile, Cn2Profile, TurbulenceMoments,
};
use crate::beam::{
    collection_efficiency, curvature_for_waist, derive_beam, max_waist_distance, spot_sizes_with, BeamState,
    PointingConfig, SpotSizes, WaistBranch,
};
use crate::coupling::{
    ao_chain_log, fried_parameter, scintillation, standalone_ao_coupling, AoConfig, HopAberration,
    ScintillationResult, ETA0,
};
use crate::error::{ensure, Error, Result};
use crate::geometry::{horizontal_path, max_unobstructed_arc, slant_path, EarthModel, PathGeometry, PathKind};
use crate::numerics::{golden_section_max, to_db};

const WAIST_GRID: usize = 201;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Platform {
    Balloon,
    Satellite,
}

impl Platform {
    pub fn altitude_km(self) -> f64 {
        match self {
            Platform::Balloon => 24.0,
            Platform::Satellite => 500.0,
        }
    }
}

/// Transmit beam diameters (2·W0) and receiver diameters, metres.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Apertures {
    pub up_tx_m: f64,
    pub up_rx_m: f64,
    pub hor_tx_m: f64,
    pub hor_rx_m: f64,
    pub down_tx_m: f64,
    pub down_rx_m: f64,
}

impl Apertures {
    pub fn balloon() -> Self {
        Self {
            up_tx_m: 0.2,
            up_rx_m: 0.6,
            hor_tx_m: 0.6,
            hor_rx_m: 0.6,
            down_tx_m: 0.2,
            down_rx_m: 0.6,
        }
    }

    pub fn satellite() -> Self {
        Self {
            up_tx_m: 1.2,
            up_rx_m: 0.6,
            down_tx_m: 0.6,
            down_rx_m: 1.2,
            ..Self::balloon()
        }
    }

    fn for_kind(&self, kind: PathKind) -> (f64, f64) {
        match kind {
            PathKind::Uplink => (self.up_tx_m, self.up_rx_m),
            PathKind::Horizontal => (self.hor_tx_m, self.hor_rx_m),
            PathKind::Downlink => (self.down_tx_m, self.down_rx_m),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WaistPolicy {
    Optimized,
    MidPath,
    Transmitter,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainConfig {
    pub platform: Platform,
    pub platform_altitude_km: f64,
    pub ground_altitude_km: f64,
    pub zenith_rad: f64,
    pub distance_km: f64,
    /// Number of platforms, including the two that talk to the ground.
    pub relay_count: usize,
    pub apertures: Apertures,
    pub eta_t: f64,
    pub eta_r: f64,
    pub wavelength_m: f64,
    pub ao: AoConfig,
    /// Platform drift speed used for the pointing term; zero disables it.
    pub drift_m_s: f64,
    pub cn2: Cn2Profile,
    pub attenuation: AttenuationProfile,
    /// Whether horizontal hops see the atmosphere at all.
    pub horizontal_atmosphere: bool,
    /// Waist placement on horizontal hops. Ground links are always optimized.
    pub waist_policy: WaistPolicy,
    pub earth: EarthModel,
}

impl ChainConfig {
    pub fn balloon(distance_km: f64, relay_count: usize) -> Self {
        Self {
            platform: Platform::Balloon,
            platform_altitude_km: Platform::Balloon.altitude_km(),
            ground_altitude_km: 0.002,
            zenith_rad: 0.0,
            distance_km,
            relay_count,
            apertures: Apertures::balloon(),
            eta_t: 0.98,
            eta_r: 0.98,
            wavelength_m: 1537e-9,
            ao: AoConfig::table(),
            drift_m_s: 10.0,
            cn2: Cn2Profile::hv57(),
            attenuation: AttenuationProfile::embedded_1537nm(),
            horizontal_atmosphere: true,
            waist_policy: WaistPolicy::Optimized,
            earth: EarthModel::default(),
        }
    }

    pub fn satellite(distance_km: f64, relay_count: usize) -> Self {
        Self {
            platform: Platform::Satellite,
            platform_altitude_km: Platform::Satellite.altitude_km(),
            apertures: Apertures::satellite(),
            drift_m_s: 0.0,
            horizontal_atmosphere: false,
            ..Self::balloon(distance_km, relay_count)
        }
    }

    pub fn for_platform(platform: Platform, distance_km: f64, relay_count: usize) -> Self {
        match platform {
            Platform::Balloon => Self::balloon(distance_km, relay_count),
            Platform::Satellite => Self::satellite(distance_km, relay_count),
        }
    }

    pub fn validate(&self) -> Result<()> {
        ensure(self.relay_count >= 2, || {
            format!("relay_count must be at least 2, got {}", self.relay_count)
        })?;
        ensure(self.distance_km > 0.0, || "distance must be positive".into())?;
        ensure(
            (0.0..=1.0).contains(&self.eta_t) && (0.0..=1.0).contains(&self.eta_r),
            || "optical transmittances must lie in [0, 1]".into(),
        )?;
        ensure(self.wavelength_m > 0.0, || "wavelength must be positive".into())?;
        ensure(self.drift_m_s >= 0.0, || "drift speed must be non-negative".into())?;
        let a = &self.apertures;
        for d in [a.up_tx_m, a.up_rx_m, a.hor_tx_m, a.hor_rx_m, a.down_tx_m, a.down_rx_m] {
            ensure(d > 0.0, || format!("aperture diameters must be positive, got {d}"))?;
        }
        self.ao.validate()
    }

    pub fn spacing_km(&self) -> f64 {
        self.distance_km / (self.relay_count - 1) as f64
    }

    fn hop_context(&self, path: PathGeometry) -> HopContext<'_> {
        let (tx, rx) = self.apertures.for_kind(path.kind);
        let atmospheric = path.kind.is_vertical() || self.horizontal_atmosphere;
        HopContext {
            path,
            w0_m: 0.5 * tx,
            d_rx_m: rx,
            wavelength_m: self.wavelength_m,
            cn2: if atmospheric { Some(&self.cn2) } else { None },
            attenuation: if atmospheric { Some(&self.attenuation) } else { None },
            pointing: PointingConfig {
                mean_wind_m_s: self.drift_m_s,
            },
            ao: self.ao,
            optics: self.eta_t * self.eta_r,
        }
    }

    fn uplink(&self, zenith_rad: f64) -> Result<PathGeometry> {
        slant_path(PathKind::Uplink, self.platform_altitude_km, self.ground_altitude_km, zenith_rad)
    }

    fn downlink(&self, zenith_rad: f64) -> Result<PathGeometry> {
        slant_path(PathKind::Downlink, self.platform_altitude_km, self.ground_altitude_km, zenith_rad)
    }

    fn horizontal(&self, arc_km: f64) -> Result<PathGeometry> {
        horizontal_path(arc_km, self.platform_altitude_km, self.earth)
    }
}

/// Everything needed to evaluate one hop.
#[derive(Debug, Clone)]
pub struct HopContext<'a> {
    pub path: PathGeometry,
    pub w0_m: f64,
    pub d_rx_m: f64,
    pub wavelength_m: f64,
    /// `None` when the hop runs above the atmosphere.
    pub cn2: Option<&'a Cn2Profile>,
    pub attenuation: Option<&'a AttenuationProfile>,
    pub pointing: PointingConfig,
    pub ao: AoConfig,
    pub optics: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HopRecord {
    pub kind: PathKind,
    pub length_km: f64,
    pub arc_km: f64,
    pub zenith_rad: f64,
    pub min_altitude_km: f64,
    pub waist_distance_m: f64,
    pub waist_branch: WaistBranch,
    pub beam: BeamState,
    pub spot: SpotSizes,
    /// η_t·η_r
    pub optics: f64,
    pub atmosphere: f64,
    pub collection: f64,
    pub r0_m: f64,
    pub rytov: f64,
    pub scintillation: ScintillationResult,
    pub d_rx_m: f64,
    pub ao: AoConfig,
    /// AO coupling factor this hop would have on its own.
    pub standalone_ao: f64,
}

impl HopRecord {
    /// η_CH = η_t·η_r·η_atm·η_collection.
    pub fn channel(&self) -> f64 {
        self.optics * self.atmosphere * self.collection
    }

    fn aberration(&self) -> HopAberration {
        HopAberration {
            d_rx_m: self.d_rx_m,
            r0_m: self.r0_m,
            ao: self.ao,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelBudget {
    pub relay_count: usize,
    pub hops: Vec<HopRecord>,
    pub eta0: f64,
    pub ao: f64,
    pub scintillation: f64,
    pub total_linear: f64,
    pub total_db: f64,
}

impl ChannelBudget {
    pub fn smf(&self) -> f64 {
        self.eta0 * self.ao * self.scintillation
    }

    pub fn uplink(&self) -> &HopRecord {
        &self.hops[0]
    }

    pub fn downlink(&self) -> &HopRecord {
        &self.hops[self.hops.len() - 1]
    }

    pub fn horizontal(&self) -> &[HopRecord] {
        &self.hops[1..self.hops.len() - 1]
    }

    /// Product of all per-hop optics, atmosphere and collection factors.
    pub fn hop_product(&self) -> f64 {
        self.hops.iter().map(HopRecord::channel).product()
    }

    pub fn optics_db(&self) -> f64 {
        self.hops.iter().map(|h| to_db(h.optics)).sum()
    }

    pub fn atmosphere_db(&self) -> f64 {
        self.hops.iter().map(|h| to_db(h.atmosphere)).sum()
    }

    pub fn collection_db(&self) -> f64 {
        self.hops.iter().map(|h| to_db(h.collection)).sum()
    }
}

/// Combine hop records (propagation order) into a chain budget.
pub fn assemble_budget(hops: Vec<HopRecord>) -> ChannelBudget {
    let aberrations: Vec<HopAberration> = hops.iter().map(HopRecord::aberration).collect();
    let ao = ao_chain_log(&aberrations).exp();
    let scint: f64 = hops.iter().map(|h| h.scintillation.eta_s).product();
    let product: f64 = hops.iter().map(HopRecord::channel).product();
    let total = product * ETA0 * ao * scint;
    ChannelBudget {
        relay_count: hops.len() - 1,
        hops,
        eta0: ETA0,
        ao,
        scintillation: scint,
        total_linear: total,
        total_db: to_db(total),
    }
}

struct Candidate {
    d: f64,
    branch: WaistBranch,
    beam: BeamState,
    spot: SpotSizes,
    collection: f64,
    r0: f64,
    standalone_ao: f64,
}

impl Candidate {
    fn objective(&self) -> f64 {
        self.collection * self.standalone_ao
    }
}

struct HopEvaluator<'a> {
    ctx: &'a HopContext<'a>,
    base: TurbulenceMoments,
    zero: Cn2Profile,
}

impl<'a> HopEvaluator<'a> {
    fn new(ctx: &'a HopContext<'a>) -> Result<Self> {
        let zero = Cn2Profile::Constant(0.0);
        let base = match ctx.cn2 {
            Some(c) => path_moments(&ctx.path, c, ctx.wavelength_m)?,
            None => TurbulenceMoments::default(),
        };
        Ok(Self { ctx, base, zero })
    }

    fn cn2(&self) -> &Cn2Profile {
        self.ctx.cn2.unwrap_or(&self.zero)
    }

    fn at(&self, d: f64, branch: WaistBranch) -> Result<Candidate> {
        let ctx = self.ctx;
        let f0 = curvature_for_waist(ctx.w0_m, d, ctx.wavelength_m, branch)?;
        let beam = derive_beam(ctx.w0_m, f0, ctx.path.length_m(), ctx.wavelength_m)?;
        let moments = match (ctx.path.kind, ctx.cn2) {
            (PathKind::Horizontal, _) | (_, None) => self.base,
            (_, Some(c)) => turbulence_moments(&ctx.path, c, ctx.wavelength_m, beam.theta)?,
        };
        let spot = spot_sizes_with(&beam, &ctx.path, self.cn2(), &moments, &ctx.pointing)?;
        let collection = collection_efficiency(spot.w_eff_m, ctx.d_rx_m);
        let r0 = fried_parameter(&ctx.path, &beam, self.cn2(), &moments);
        let standalone_ao = standalone_ao_coupling(&HopAberration {
            d_rx_m: ctx.d_rx_m,
            r0_m: r0,
            ao: ctx.ao,
        });
        Ok(Candidate {
            d,
            branch,
            beam,
            spot,
            collection,
            r0,
            standalone_ao,
        })
    }

    /// Objective with invalid-model candidates scored as unusable.
    fn score(&self, d: f64, branch: WaistBranch) -> Result<f64> {
        match self.at(d, branch) {
            Ok(c) => Ok(c.objective()),
            Err(Error::NegativeShortTerm { .. }) => Ok(f64::NEG_INFINITY),
            Err(e) => Err(e),
        }
    }

    fn fixed(&self, d: f64) -> Result<Candidate> {
        let d_max = max_waist_distance(self.ctx.w0_m, self.ctx.wavelength_m);
        if d > d_max {
            return Err(Error::UnreachableWaist {
                requested_m: d,
                max_m: d_max,
            });
        }
        let mut best: Option<Candidate> = None;
        let mut last_err = None;
        for br in [WaistBranch::Tight, WaistBranch::Loose] {
            match self.at(d, br) {
                Ok(c) => {
                    if best.as_ref().map_or(true, |b| c.objective() > b.objective()) {
                        best = Some(c);
                    }
                }
                Err(e) => last_err = Some(e),
            }
        }
        best.ok_or_else(|| last_err.expect("at least one branch evaluated"))
    }

    fn optimize(&self) -> Result<Candidate> {
        let d_max = max_waist_distance(self.ctx.w0_m, self.ctx.wavelength_m);
        let grid: Vec<f64> = (0..WAIST_GRID)
            .map(|i| d_max * i as f64 / (WAIST_GRID - 1) as f64)
            .collect();
        let mut best = (f64::NEG_INFINITY, 0usize, WaistBranch::Loose);
        for br in [WaistBranch::Tight, WaistBranch::Loose] {
            for (i, d) in grid.iter().enumerate() {
                let s = self.score(*d, br)?;
                if s > best.0 {
                    best = (s, i, br);
                }
            }
        }
        let (score, i, br) = best;
        if score == f64::NEG_INFINITY {
            // every candidate broke the short-term model; surface that
            return self.at(grid[WAIST_GRID / 2], WaistBranch::Loose);
        }
        let lo = grid[i.saturating_sub(1)];
        let hi = grid[(i + 1).min(WAIST_GRID - 1)];
        let tol = 1e-4 * self.ctx.path.length_m();
        let mut err = None;
        let (d_ref, s_ref) = golden_section_max(
            |d| match self.score(d, br) {
                Ok(v) => v,
                Err(e) => {
                    err = Some(e);
                    f64::NEG_INFINITY
                }
            },
            lo,
            hi,
            tol,
        );
        if let Some(e) = err {
            return Err(e);
        }
        let d = if s_ref >= score { d_ref } else { grid[i] };
        self.at(d, br)
    }
}

fn record(ctx: &HopContext<'_>, c: Candidate, rytov: f64) -> Result<HopRecord> {
    let atmosphere = match ctx.attenuation {
        Some(a) => atmospheric_transmittance(&ctx.path, a)?,
        None => 1.0,
    };
    let moments = TurbulenceMoments {
        rytov,
        ..TurbulenceMoments::default()
    };
    Ok(HopRecord {
        kind: ctx.path.kind,
        length_km: ctx.path.length_km,
        arc_km: ctx.path.arc_km,
        zenith_rad: ctx.path.zenith_rad,
        min_altitude_km: ctx.path.min_altitude_km,
        waist_distance_m: c.d,
        waist_branch: c.branch,
        beam: c.beam,
        spot: c.spot,
        optics: ctx.optics,
        atmosphere,
        collection: c.collection,
        r0_m: c.r0,
        rytov,
        scintillation: scintillation(&ctx.path, ctx.wavelength_m, &moments, ctx.d_rx_m),
        d_rx_m: ctx.d_rx_m,
        ao: ctx.ao,
        standalone_ao: c.standalone_ao,
    })
}

/// Evaluate one hop with its waist placed according to `policy`.
pub fn hop_budget(ctx: &HopContext<'_>, policy: WaistPolicy) -> Result<HopRecord> {
    let eval = HopEvaluator::new(ctx)?;
    let c = match policy {
        WaistPolicy::Optimized => eval.optimize()?,
        WaistPolicy::MidPath => eval.fixed(0.5 * ctx.path.length_m())?,
        WaistPolicy::Transmitter => eval.fixed(0.0)?,
    };
    record(ctx, c, eval.base.rytov)
}

/// Best waist distance (m) and the resulting hop record.
pub fn optimize_waist(ctx: &HopContext<'_>, policy: WaistPolicy) -> Result<(f64, HopRecord)> {
    let r = hop_budget(ctx, policy)?;
    Ok((r.waist_distance_m, r))
}

fn ground_hops(cfg: &ChainConfig, up_zenith: f64, down_zenith: f64) -> Result<(HopRecord, HopRecord)> {
    let up = hop_budget(&cfg.hop_context(cfg.uplink(up_zenith)?), WaistPolicy::Optimized)?;
    let down = hop_budget(&cfg.hop_context(cfg.downlink(down_zenith)?), WaistPolicy::Optimized)?;
    Ok((up, down))
}

fn horizontal_hop(cfg: &ChainConfig, arc_km: f64) -> Result<HopRecord> {
    hop_budget(&cfg.hop_context(cfg.horizontal(arc_km)?), cfg.waist_policy)
}

fn chain_from(up: HopRecord, hor: Option<HopRecord>, down: HopRecord, relay_count: usize) -> ChannelBudget {
    let mut hops = Vec::with_capacity(relay_count + 1);
    hops.push(up);
    if let Some(h) = hor {
        hops.extend(std::iter::repeat(h).take(relay_count - 1));
    }
    hops.push(down);
    assemble_budget(hops)
}

/// Budget of an evenly spaced chain.
pub fn chain_budget(cfg: &ChainConfig) -> Result<ChannelBudget> {
    cfg.validate()?;
    let hor = horizontal_hop(cfg, cfg.spacing_km()).map_err(|e| e.at_hop(1))?;
    let (up, down) = ground_hops(cfg, cfg.zenith_rad, cfg.zenith_rad)?;
    Ok(chain_from(up, Some(hor), down, cfg.relay_count))
}

/// Smallest platform count whose spacing clears the ground.
pub fn min_feasible_relays(cfg: &ChainConfig) -> usize {
    let arc = max_unobstructed_arc(cfg.platform_altitude_km, cfg.earth);
    let mut n = ((cfg.distance_km / arc).ceil() as usize + 1).max(2);
    while n > 2 && cfg.distance_km / ((n - 2) as f64) < arc {
        n -= 1;
    }
    while cfg.distance_km / ((n - 1) as f64) >= arc {
        n += 1;
    }
    n
}

/// Default scan range: feasibility minimum to one platform per 50 km.
pub fn default_relay_range(cfg: &ChainConfig) -> (usize, usize) {
    let lo = min_feasible_relays(cfg);
    let hi = ((cfg.distance_km / 50.0).ceil() as usize).max(lo);
    (lo, hi)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelayScan {
    pub best: ChannelBudget,
    /// (platform count, total dB); NaN marks counts that are obstructed or
    /// whose fixed waist cannot be reached.
    pub envelope: Vec<(usize, f64)>,
}

impl RelayScan {
    pub fn best_relay_count(&self) -> usize {
        self.best.relay_count
    }
}

/// Scan platform counts and keep the best chain.
pub fn optimize_relay_count(cfg: &ChainConfig, range: Option<(usize, usize)>) -> Result<RelayScan> {
    let mut probe = cfg.clone();
    probe.relay_count = 2;
    probe.validate()?;
    let (lo, hi) = range.unwrap_or_else(|| default_relay_range(cfg));
    ensure(lo >= 2 && hi >= lo, || format!("bad relay range [{lo}, {hi}]"))?;
    let (up, down) = ground_hops(cfg, cfg.zenith_rad, cfg.zenith_rad)?;
    let results: Vec<(usize, Result<ChannelBudget>)> = (lo..=hi)
        .into_par_iter()
        .map(|n| {
            let arc = cfg.distance_km / (n - 1) as f64;
            let b = horizontal_hop(cfg, arc).map(|h| chain_from(up, Some(h), down, n));
            (n, b)
        })
        .collect();
    let mut envelope = Vec::with_capacity(results.len());
    let mut best: Option<ChannelBudget> = None;
    for (n, r) in results {
        match r {
            Ok(b) => {
                envelope.push((n, b.total_db));
                if best.as_ref().map_or(true, |x| b.total_db > x.total_db) {
                    best = Some(b);
                }
            }
            Err(Error::ObstructedPath { .. } | Error::UnreachableWaist { .. }) => envelope.push((n, f64::NAN)),
            Err(e) => return Err(e),
        }
    }
    best.map(|best| RelayScan { best, envelope })
        .ok_or(Error::EmptyFeasibleSet)
}

/// Platform position jitter, uniform on each axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JitterSpec {
    /// Half-width of the end-platform offsets, km.
    pub endpoint_range_km: f64,
    /// Half-width of relay offsets as a fraction of the nominal spacing.
    pub relay_fraction: f64,
    pub trials: usize,
    pub seed: u64,
}

impl JitterSpec {
    pub fn validate(&self) -> Result<()> {
        ensure(self.endpoint_range_km >= 0.0 && self.relay_fraction >= 0.0, || {
            "jitter ranges must be non-negative".into()
        })?;
        ensure(self.trials >= 1, || "jitter needs at least one trial".into())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JitterResult {
    pub ideal_db: f64,
    pub mean_db: f64,
    pub std_db: f64,
    /// Per-trial total dB; `None` for trials with an obstructed hop.
    pub samples: Vec<Option<f64>>,
    pub failures: usize,
}

impl JitterResult {
    pub fn failure_rate(&self) -> f64 {
        self.failures as f64 / self.samples.len() as f64
    }
}

/// Deterministic per-trial generator.
pub fn trial_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn jitter_trial(cfg: &ChainConfig, spec: &JitterSpec, trial: usize) -> Result<Option<f64>> {
    let mut rng = trial_rng(spec.seed, trial as u64);
    let n = cfg.relay_count;
    let spacing = cfg.spacing_km();
    let mut draw = |half: f64| if half > 0.0 { rng.gen_range(-half..=half) } else { 0.0 };
    let mut pos = Vec::with_capacity(n);
    for i in 0..n {
        let half = if i == 0 || i == n - 1 {
            spec.endpoint_range_km
        } else {
            spec.relay_fraction * spacing
        };
        let dx = draw(half);
        let dy = draw(half);
        pos.push((i as f64 * spacing + dx, dy));
    }
    let vertical = cfg.platform_altitude_km - cfg.ground_altitude_km;
    let zen = |dx: f64, dy: f64| (dx.hypot(dy) / vertical).atan();
    let up_z = zen(pos[0].0, pos[0].1);
    let down_z = zen(pos[n - 1].0 - cfg.distance_km, pos[n - 1].1);
    let mut hops = Vec::with_capacity(n + 1);
    let (up, down) = ground_hops(cfg, up_z, down_z)?;
    hops.push(up);
    for w in pos.windows(2) {
        let arc = (w[1].0 - w[0].0).hypot(w[1].1 - w[0].1);
        match horizontal_hop(cfg, arc) {
            Ok(h) => hops.push(h),
            Err(Error::ObstructedPath { .. }) => return Ok(None),
            Err(e) => return Err(e),
        }
    }
    hops.push(down);
    Ok(Some(assemble_budget(hops).total_db))
}

/// Monte Carlo over platform positions for a fixed chain configuration.
pub fn jitter_monte_carlo(cfg: &ChainConfig, spec: &JitterSpec) -> Result<JitterResult> {
    cfg.validate()?;
    spec.validate()?;
    let ideal = chain_budget(cfg)?.total_db;
    let samples: Vec<Option<f64>> = (0..spec.trials)
        .into_par_iter()
        .map(|t| jitter_trial(cfg, spec, t))
        .collect::<Result<_>>()?;
    let ok: Vec<f64> = samples.iter().flatten().copied().collect();
    let failures = samples.len() - ok.len();
    let (mean, std) = if ok.is_empty() {
        (f64::NAN, f64::NAN)
    } else {
        let m = ok.iter().sum::<f64>() / ok.len() as f64;
        let var = if ok.len() > 1 {
            ok.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (ok.len() - 1) as f64
        } else {
            0.0
        };
        (m, var.sqrt())
    };
    Ok(JitterResult {
        ideal_db: ideal,
        mean_db: mean,
        std_db: std,
        samples,
        failures,
    })
}
