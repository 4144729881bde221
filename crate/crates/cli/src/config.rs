//! Scenario documents. Every section rejects unknown keys and units live in key names.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use skyrelay_core::atmosphere::{AttenuationProfile, Cn2Profile, ProfileTable};
use skyrelay_core::coupling::{AoConfig, CorrectionModel};
use skyrelay_core::geometry::EarthModel;
use skyrelay_core::relay_chain::{ChainConfig, JitterSpec, Platform, WaistPolicy};
use skyrelay_core::repeater_rates::RepeaterParams;
use skyrelay_core::repeater_sim::SimConfig;

use crate::CliError;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default)]
    pub channel: ChannelSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub repeater: Option<RepeaterSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub simulation: Option<SimulationSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub jitter: Option<JitterSection>,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttenuationChoice {
    Bundled,
    Exponential,
    Vacuum,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

impl<T: Clone> OneOrMany<T> {
    pub fn to_vec(&self) -> Vec<T> {
        match self {
            OneOrMany::One(x) => vec![x.clone()],
            OneOrMany::Many(v) => v.clone(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelSection {
    pub platform: Option<Platform>,
    pub distance_km: Option<f64>,
    /// Platforms including both ends; omit to scan for the best count.
    pub relay_count: Option<usize>,
    pub relay_min: Option<usize>,
    pub relay_max: Option<usize>,
    pub platform_altitude_km: Option<f64>,
    pub ground_altitude_km: Option<f64>,
    pub zenith_deg: Option<f64>,
    pub wavelength_nm: Option<f64>,
    pub eta_t: Option<f64>,
    pub eta_r: Option<f64>,
    pub up_tx_m: Option<f64>,
    pub up_rx_m: Option<f64>,
    pub hor_tx_m: Option<f64>,
    pub hor_rx_m: Option<f64>,
    pub down_tx_m: Option<f64>,
    pub down_rx_m: Option<f64>,
    pub drift_m_s: Option<f64>,
    pub horizontal_atmosphere: Option<bool>,
    pub waist_policy: Option<OneOrMany<WaistPolicy>>,
    pub earth_radius_km: Option<f64>,
    pub attenuation: Option<AttenuationChoice>,
    pub attenuation_file: Option<PathBuf>,
    pub alpha0_per_km: Option<f64>,
    pub scale_height_km: Option<f64>,
    pub cn2_scale: Option<f64>,
    pub ao: Option<bool>,
    pub ao_model: Option<CorrectionModel>,
    pub ao_orders: Option<usize>,
    pub ao_gain: Option<f64>,
    pub ao_delay_s: Option<f64>,
    pub ao_integration_s: Option<f64>,
    pub ao_wind_m_s: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RepeaterSection {
    pub distance_km: Option<f64>,
    pub eta_m: Option<f64>,
    pub eta_d: Option<f64>,
    pub rho: Option<f64>,
    pub rate_hz: Option<f64>,
    pub dependent_modes: Option<usize>,
    pub independent_modes: Option<usize>,
    pub memory_time_s: Option<f64>,
    pub unlimited_memory: Option<bool>,
    pub client_fiber_km: Option<f64>,
    pub fiber_loss_db_per_km: Option<f64>,
    pub signal_speed_m_s: Option<f64>,
    pub fiber_constraint: Option<bool>,
    /// Per-segment channel efficiency; omit both to derive it from `[channel]`.
    pub eta_ch: Option<f64>,
    pub eta_ch_db: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepScale {
    Linear,
    Log,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub variable: String,
    pub start: Option<f64>,
    pub stop: Option<f64>,
    pub steps: Option<usize>,
    pub scale: Option<SweepScale>,
    pub values: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationSection {
    pub trials: Option<usize>,
    pub seed: Option<u64>,
    pub max_clocks_per_trial: Option<u64>,
    pub streams: Option<usize>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JitterSection {
    pub endpoint_range_km: Option<f64>,
    pub relay_fraction: Option<f64>,
    pub trials: Option<usize>,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub format: Option<Format>,
    pub path: Option<PathBuf>,
}

fn bad(key: &str, msg: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("{key}: {msg}"))
}

impl ScenarioConfig {
    /// Parse a TOML document, or the single-line JSON form embedded in outputs.
    pub fn parse(text: &str) -> Result<Self, CliError> {
        if text.trim_start().starts_with('{') {
            serde_json::from_str(text).map_err(|e| CliError::Config(format!("invalid config: {e}")))
        } else {
            toml::from_str(text).map_err(|e| CliError::Config(format!("invalid config: {e}")))
        }
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Canonical single-line form, hashed into every output.
    pub fn canonical(&self) -> String {
        fn prune(v: &mut serde_json::Value) {
            if let serde_json::Value::Object(m) = v {
                m.retain(|_, x| !x.is_null());
                m.values_mut().for_each(prune);
                m.retain(|_, x| !matches!(x, serde_json::Value::Object(o) if o.is_empty()));
            }
        }
        let mut v = serde_json::to_value(self).expect("config serializes");
        prune(&mut v);
        v.to_string()
    }

    pub fn apply_seed(&mut self, seed: u64) {
        self.simulation.get_or_insert_with(Default::default).seed = Some(seed);
        self.jitter.get_or_insert_with(Default::default).seed = Some(seed);
    }
}

impl ChannelSection {
    pub fn distance(&self) -> f64 {
        self.distance_km.unwrap_or(10_000.0)
    }

    pub fn policies(&self) -> Vec<WaistPolicy> {
        self.waist_policy
            .as_ref()
            .map_or(vec![WaistPolicy::Optimized], OneOrMany::to_vec)
    }

    pub fn relay_range(&self) -> Option<(usize, usize)> {
        match (self.relay_min, self.relay_max) {
            (None, None) => None,
            (lo, hi) => Some((lo.unwrap_or(2), hi.unwrap_or(lo.unwrap_or(2).max(400)))),
        }
    }

    /// Chain for one distance; the relay count placeholder is 2 when scanning.
    pub fn chain(&self, distance_km: f64, policy: WaistPolicy) -> Result<ChainConfig, CliError> {
        let platform = self.platform.unwrap_or(Platform::Balloon);
        let mut c = ChainConfig::for_platform(platform, distance_km, self.relay_count.unwrap_or(2));
        c.waist_policy = policy;
        macro_rules! set {
            ($field:ident => $target:expr) => {
                if let Some(v) = self.$field {
                    $target = v;
                }
            };
        }
        set!(platform_altitude_km => c.platform_altitude_km);
        set!(ground_altitude_km => c.ground_altitude_km);
        set!(eta_t => c.eta_t);
        set!(eta_r => c.eta_r);
        set!(up_tx_m => c.apertures.up_tx_m);
        set!(up_rx_m => c.apertures.up_rx_m);
        set!(hor_tx_m => c.apertures.hor_tx_m);
        set!(hor_rx_m => c.apertures.hor_rx_m);
        set!(down_tx_m => c.apertures.down_tx_m);
        set!(down_rx_m => c.apertures.down_rx_m);
        set!(drift_m_s => c.drift_m_s);
        set!(horizontal_atmosphere => c.horizontal_atmosphere);
        if let Some(z) = self.zenith_deg {
            c.zenith_rad = z.to_radians();
        }
        if let Some(w) = self.wavelength_nm {
            c.wavelength_m = w * 1e-9;
        }
        if let Some(r) = self.earth_radius_km {
            c.earth = EarthModel::new(r).map_err(|e| bad("channel.earth_radius_km", e))?;
        }
        if let Some(s) = self.cn2_scale {
            if s.is_nan() || s < 0.0 {
                return Err(bad("channel.cn2_scale", "expected a non-negative number"));
            }
            c.cn2 = Cn2Profile::hv57().scaled(s);
        }
        c.attenuation = self.attenuation_profile()?;
        c.ao = self.ao_config()?;
        Ok(c)
    }

    fn attenuation_profile(&self) -> Result<AttenuationProfile, CliError> {
        if let Some(path) = &self.attenuation_file {
            let table = ProfileTable::load(path).map_err(|e| bad("channel.attenuation_file", e))?;
            return Ok(AttenuationProfile::Tabulated {
                table,
                wavelength_nm: self.wavelength_nm.unwrap_or(1537.0),
            });
        }
        match self.attenuation.unwrap_or(AttenuationChoice::Bundled) {
            AttenuationChoice::Bundled => {
                AttenuationProfile::bundled_1537nm().map_err(|e| bad("channel.attenuation", e))
            }
            AttenuationChoice::Vacuum => Ok(AttenuationProfile::Vacuum),
            AttenuationChoice::Exponential => {
                let (Some(alpha0_per_km), Some(scale_height_km)) = (self.alpha0_per_km, self.scale_height_km) else {
                    return Err(bad(
                        "channel.attenuation",
                        "exponential needs alpha0_per_km and scale_height_km",
                    ));
                };
                Ok(AttenuationProfile::ExponentialScaleHeight {
                    alpha0_per_km,
                    scale_height_km,
                })
            }
        }
    }

    fn ao_config(&self) -> Result<AoConfig, CliError> {
        if self.ao == Some(false) {
            return Ok(AoConfig::disabled());
        }
        let mut ao = AoConfig::table();
        if let Some(m) = self.ao_model {
            ao.model = m;
        }
        if let Some(n) = self.ao_orders {
            ao.n_ao = n;
        }
        if let Some(k) = self.ao_gain {
            ao.gain_ki = k;
        }
        if let Some(t) = self.ao_delay_s {
            ao.delay_s = t;
        }
        if let Some(t) = self.ao_integration_s {
            ao.integration_s = t;
        }
        if let Some(v) = self.ao_wind_m_s {
            ao.wind_m_s = v;
        }
        ao.validate().map_err(|e| bad("channel.ao", e))?;
        Ok(ao)
    }
}

impl RepeaterSection {
    pub fn distance(&self) -> f64 {
        self.distance_km.unwrap_or(3000.0)
    }

    /// Channel efficiency fixed by the document, if any.
    pub fn fixed_eta(&self) -> Result<Option<f64>, CliError> {
        match (self.eta_ch, self.eta_ch_db) {
            (Some(_), Some(_)) => Err(bad("repeater.eta_ch", "give eta_ch or eta_ch_db, not both")),
            (Some(x), None) => Ok(Some(x)),
            (None, Some(db)) => Ok(Some(10f64.powf(db / 10.0))),
            (None, None) => Ok(None),
        }
    }

    pub fn params(&self, distance_km: f64, eta_ch: f64) -> Result<RepeaterParams, CliError> {
        let mut p = RepeaterParams::table_defaults(distance_km, eta_ch);
        macro_rules! set {
            ($field:ident) => {
                if let Some(v) = self.$field {
                    p.$field = v;
                }
            };
        }
        set!(eta_m);
        set!(eta_d);
        set!(rho);
        set!(rate_hz);
        set!(dependent_modes);
        set!(independent_modes);
        set!(memory_time_s);
        set!(client_fiber_km);
        set!(fiber_loss_db_per_km);
        set!(signal_speed_m_s);
        set!(fiber_constraint);
        if self.unlimited_memory == Some(true) {
            p.memory_time_s = f64::INFINITY;
        }
        p.validate().map_err(|e| bad("repeater", e))?;
        Ok(p)
    }
}

impl SimulationSection {
    pub fn sim(&self, params: RepeaterParams) -> Result<SimConfig, CliError> {
        let mut c = SimConfig::new(params, self.trials.unwrap_or(100_000), self.seed.unwrap_or(1));
        if let Some(m) = self.max_clocks_per_trial {
            c.max_clocks_per_trial = m;
        }
        if let Some(s) = self.streams {
            c.streams = s;
        }
        c.validate().map_err(|e| bad("simulation", e))?;
        Ok(c)
    }
}

impl JitterSection {
    pub fn spec(&self) -> Result<JitterSpec, CliError> {
        let s = JitterSpec {
            endpoint_range_km: self.endpoint_range_km.unwrap_or(5.0),
            relay_fraction: self.relay_fraction.unwrap_or(0.2),
            trials: self.trials.unwrap_or(200),
            seed: self.seed.unwrap_or(7),
        };
        s.validate().map_err(|e| bad("jitter", e))?;
        Ok(s)
    }
}

impl SweepSection {
    pub fn points(&self) -> Result<Vec<f64>, CliError> {
        if let Some(v) = &self.values {
            if v.is_empty() {
                return Err(bad("sweep.values", "expected at least one value"));
            }
            return Ok(v.clone());
        }
        let (Some(a), Some(b)) = (self.start, self.stop) else {
            return Err(bad("sweep", "expected either values or start and stop"));
        };
        let steps = self.steps.unwrap_or(10);
        if steps == 0 {
            return Err(bad("sweep.steps", "expected at least 1"));
        }
        if steps == 1 {
            return Ok(vec![a]);
        }
        let scale = self.scale.unwrap_or(SweepScale::Linear);
        if scale == SweepScale::Log && (a <= 0.0 || b <= 0.0) {
            return Err(bad("sweep.scale", "log sweeps need positive start and stop"));
        }
        Ok((0..steps)
            .map(|i| {
                let t = i as f64 / (steps - 1) as f64;
                match scale {
                    SweepScale::Linear => a + (b - a) * t,
                    SweepScale::Log => (a.ln() + (b.ln() - a.ln()) * t).exp(),
                }
            })
            .collect())
    }

    pub fn check_variable(&self, allowed: &[&str]) -> Result<(), CliError> {
        if allowed.contains(&self.variable.as_str()) {
            Ok(())
        } else {
            Err(bad(
                "sweep.variable",
                format!("unknown variable `{}`, expected one of: {}", self.variable, allowed.join(", ")),
            ))
        }
    }
}
