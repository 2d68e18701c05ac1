//! LEO line-of-sight channel: slant-range geometry, single-tap free-space
//! coefficients, superposition of the users' grids with AWGN, Eb/N0
//! calibration and channel dataset files.

use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{self, SimRng};
use crate::scma::ResourceGrid;
use crate::Complex;

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
const EARTH_GM: f64 = 3.986_004_418e14;

/// Static link geometry and antenna parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Geometry {
    pub altitude_m: f64,
    pub carrier_hz: f64,
    /// Linear transmit gain.
    pub tx_gain: f64,
    /// Linear receive gain.
    pub rx_gain: f64,
    /// Linear power factor for losses beyond free space (1 = none).
    pub extra_loss: f64,
    pub earth_radius_m: f64,
}

impl Default for Geometry {
    fn default() -> Self {
        Geometry {
            altitude_m: 600e3,
            carrier_hz: 2e9,
            tx_gain: 1.0,
            rx_gain: 1.0,
            extra_loss: 1.0,
            earth_radius_m: 6371e3,
        }
    }
}

impl Geometry {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("altitude_m", self.altitude_m),
            ("carrier_hz", self.carrier_hz),
            ("tx_gain", self.tx_gain),
            ("rx_gain", self.rx_gain),
            ("extra_loss", self.extra_loss),
            ("earth_radius_m", self.earth_radius_m),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidArgument(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }

    pub fn wavelength(&self) -> f64 {
        SPEED_OF_LIGHT / self.carrier_hz
    }

    /// Distance from a ground terminal at `elevation` (radians) to the
    /// satellite, on a spherical Earth.
    pub fn slant_range(&self, elevation: f64) -> f64 {
        let (r, h) = (self.earth_radius_m, self.altitude_m);
        let s = elevation.sin();
        (r * r * s * s + h * h + 2.0 * r * h).sqrt() - r * s
    }

    /// Free-space single-tap coefficient at slant range `distance`:
    /// `G_tx G_rx sqrt(L) lambda / (4 pi d) exp(-j 2 pi d / lambda)`.
    pub fn coefficient(&self, distance: f64) -> Complex {
        Complex::from_polar(self.gain(distance), self.phase(distance))
    }

    /// Magnitude of [`Geometry::coefficient`].
    pub fn gain(&self, distance: f64) -> f64 {
        let lambda = self.wavelength();
        self.tx_gain * self.rx_gain * self.extra_loss.sqrt() * lambda / (4.0 * PI * distance)
    }

    /// Phase of [`Geometry::coefficient`], reduced to `(-2 pi, 0]`.
    ///
    /// Only the fractional number of wavelengths matters, which keeps the
    /// phase accurate at slant ranges of millions of wavelengths.
    pub fn phase(&self, distance: f64) -> f64 {
        let cycles = distance / self.wavelength();
        -2.0 * PI * cycles.fract()
    }

    /// Elevation rate of an overhead pass, from the circular orbital
    /// angular velocity scaled by `(R + h) / h`.
    pub fn zenith_elevation_rate(&self) -> f64 {
        let a = self.earth_radius_m + self.altitude_m;
        (EARTH_GM / (a * a * a)).sqrt() * a / self.altitude_m
    }
}

/// Whether coefficient rows keep their physical magnitude or are scaled
/// to unit mean power.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChannelMode {
    Normalized,
    Physical,
}

impl ChannelMode {
    pub fn as_str(self) -> &'static str {
        match self {
            ChannelMode::Normalized => "normalized",
            ChannelMode::Physical => "physical",
        }
    }
}

impl std::str::FromStr for ChannelMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "normalized" => Ok(ChannelMode::Normalized),
            "physical" => Ok(ChannelMode::Physical),
            other => Err(Error::Parse(format!("unknown channel mode {other:?}"))),
        }
    }
}

/// Linear elevation-vs-time pass model.
///
/// Each user starts at a fixed elevation (given, or drawn uniformly from
/// `[min_elevation_rad, pi/2]` by the seed) and moves at a constant rate;
/// trajectories reflect at zenith and at the minimum elevation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PassModel {
    pub initial_elevations_rad: Option<Vec<f64>>,
    pub min_elevation_rad: f64,
    /// Radians per second; `None` uses [`Geometry::zenith_elevation_rate`].
    pub elevation_rate_rad_s: Option<f64>,
    /// Symbol duration; 1 ms slot / 14 symbols for numerology 0.
    pub symbol_duration_s: f64,
}

impl Default for PassModel {
    fn default() -> Self {
        PassModel {
            initial_elevations_rad: None,
            min_elevation_rad: 30f64.to_radians(),
            elevation_rate_rad_s: None,
            symbol_duration_s: 1e-3 / 14.0,
        }
    }
}

impl PassModel {
    /// A pass frozen at the given elevations.
    pub fn fixed(elevations: Vec<f64>) -> Self {
        PassModel {
            initial_elevations_rad: Some(elevations),
            elevation_rate_rad_s: Some(0.0),
            ..PassModel::default()
        }
    }

    fn validate(&self, users: usize) -> Result<()> {
        if !(self.min_elevation_rad > 0.0 && self.min_elevation_rad <= FRAC_PI_2) {
            return Err(Error::InvalidArgument("min elevation must lie in (0, pi/2]".into()));
        }
        if let Some(e) = &self.initial_elevations_rad {
            if e.len() != users {
                return Err(Error::LengthMismatch {
                    expected: users,
                    actual: e.len(),
                });
            }
            if e.iter().any(|&x| !(x > 0.0 && x <= FRAC_PI_2)) {
                return Err(Error::InvalidArgument("elevations must lie in (0, pi/2]".into()));
            }
        }
        Ok(())
    }
}

/// Reflects `x` into `[lo, hi]` (triangle wave).
fn fold(x: f64, lo: f64, hi: f64) -> f64 {
    let span = hi - lo;
    if span <= 0.0 {
        return hi;
    }
    let r = (x - lo).rem_euclid(2.0 * span);
    if r <= span {
        lo + r
    } else {
        hi - (r - span)
    }
}

/// `J x N_sym` matrix of single-tap coefficients, row-major by user.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    users: usize,
    symbols: usize,
    data: Vec<Complex>,
    pub mode: ChannelMode,
    pub seed: u64,
}

impl ChannelRealization {
    pub fn from_rows(rows: Vec<Vec<Complex>>, mode: ChannelMode, seed: u64) -> Result<Self> {
        let users = rows.len();
        let symbols = rows.first().map_or(0, Vec::len);
        if users == 0 || symbols == 0 || rows.iter().any(|r| r.len() != symbols) {
            return Err(Error::Shape("channel rows must be nonempty and equal length".into()));
        }
        Ok(ChannelRealization {
            users,
            symbols,
            data: rows.into_iter().flatten().collect(),
            mode,
            seed,
        })
    }

    pub fn users(&self) -> usize {
        self.users
    }

    pub fn symbols(&self) -> usize {
        self.symbols
    }

    pub fn get(&self, user: usize, symbol: usize) -> Complex {
        self.data[user * self.symbols + symbol]
    }

    pub fn row(&self, user: usize) -> &[Complex] {
        &self.data[user * self.symbols..(user + 1) * self.symbols]
    }

    /// Coefficients of all users at one symbol time.
    pub fn column(&self, symbol: usize) -> Vec<Complex> {
        (0..self.users).map(|i| self.get(i, symbol)).collect()
    }

    /// Columns `[start, start + len)`.
    pub fn window(&self, start: usize, len: usize) -> Result<ChannelRealization> {
        if len == 0 || start + len > self.symbols {
            return Err(Error::Shape(format!(
                "window [{start}, {}) outside {} symbols",
                start + len,
                self.symbols
            )));
        }
        let rows = (0..self.users).map(|i| self.row(i)[start..start + len].to_vec()).collect();
        ChannelRealization::from_rows(rows, self.mode, self.seed)
    }

    /// Mean `|h|^2` over time for one user.
    pub fn mean_power(&self, user: usize) -> f64 {
        self.row(user).iter().map(|h| h.norm_sqr()).sum::<f64>() / self.symbols as f64
    }

    /// Mean `|h|^2` over all entries.
    pub fn mean_power_all(&self) -> f64 {
        self.data.iter().map(|h| h.norm_sqr()).sum::<f64>() / self.data.len() as f64
    }

    /// Writes the dataset as CSV with a `J,n_sym,mode,seed` header block.
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(self.data.len() * 48);
        out.push_str("# scma-ntn channel dataset v1\nJ,n_sym,mode,seed\n");
        let _ = writeln!(out, "{},{},{},{}", self.users, self.symbols, self.mode.as_str(), self.seed);
        out.push_str("user,t,re,im\n");
        for i in 0..self.users {
            for t in 0..self.symbols {
                let h = self.get(i, t);
                let _ = writeln!(out, "{i},{t},{:?},{:?}", h.re, h.im);
            }
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.starts_with('#') && !l.trim().is_empty());
        let bad = |what: &str| Error::Parse(format!("channel dataset: {what}"));
        if lines.next().map(str::trim) != Some("J,n_sym,mode,seed") {
            return Err(bad("missing header"));
        }
        let meta: Vec<&str> = lines.next().ok_or_else(|| bad("missing header values"))?.split(',').collect();
        if meta.len() != 4 {
            return Err(bad("header must have 4 fields"));
        }
        let users: usize = meta[0].trim().parse().map_err(|_| bad("J"))?;
        let symbols: usize = meta[1].trim().parse().map_err(|_| bad("n_sym"))?;
        let mode: ChannelMode = meta[2].trim().parse()?;
        let seed: u64 = meta[3].trim().parse().map_err(|_| bad("seed"))?;
        if lines.next().map(str::trim) != Some("user,t,re,im") {
            return Err(bad("missing column header"));
        }
        let mut rows = vec![vec![Complex::new(f64::NAN, f64::NAN); symbols]; users];
        let mut count = 0usize;
        for line in lines {
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 4 {
                return Err(bad(&format!("malformed row {line:?}")));
            }
            let i: usize = f[0].trim().parse().map_err(|_| bad("user index"))?;
            let t: usize = f[1].trim().parse().map_err(|_| bad("symbol index"))?;
            let re: f64 = f[2].trim().parse().map_err(|_| bad("re"))?;
            let im: f64 = f[3].trim().parse().map_err(|_| bad("im"))?;
            if i >= users || t >= symbols {
                return Err(bad("index out of range"));
            }
            rows[i][t] = Complex::new(re, im);
            count += 1;
        }
        if count != users * symbols || rows.iter().flatten().any(|h| !h.re.is_finite() || !h.im.is_finite()) {
            return Err(bad("missing or non-finite entries"));
        }
        ChannelRealization::from_rows(rows, mode, seed)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        f.write_all(self.to_csv().as_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        ChannelRealization::from_csv(&text)
    }
}

/// Generates coefficients for `users` terminals over `symbols` symbol
/// times. Deterministic in `seed`.
pub fn generate_realizations(
    geometry: &Geometry,
    pass: &PassModel,
    users: usize,
    symbols: usize,
    mode: ChannelMode,
    seed: u64,
) -> Result<ChannelRealization> {
    geometry.validate()?;
    pass.validate(users)?;
    if users == 0 || symbols == 0 {
        return Err(Error::InvalidArgument("need at least one user and one symbol".into()));
    }
    let mut rng = rng::root(seed);
    let start: Vec<f64> = match &pass.initial_elevations_rad {
        Some(e) => e.clone(),
        None => (0..users)
            .map(|_| rng.random_range(pass.min_elevation_rad..=FRAC_PI_2))
            .collect(),
    };
    let rate = pass.elevation_rate_rad_s.unwrap_or_else(|| geometry.zenith_elevation_rate());
    let mut rows = Vec::with_capacity(users);
    for &e0 in &start {
        // users on opposite sides of the ground track see the pass in
        // opposite directions
        let dir = if rng.random::<bool>() { 1.0 } else { -1.0 };
        let lo = pass.min_elevation_rad.min(e0);
        let row: Vec<Complex> = (0..symbols)
            .map(|t| {
                let elevation = fold(e0 + dir * rate * pass.symbol_duration_s * t as f64, lo, FRAC_PI_2);
                geometry.coefficient(geometry.slant_range(elevation))
            })
            .collect();
        rows.push(row);
    }
    let mut real = ChannelRealization::from_rows(rows, mode, seed)?;
    if mode == ChannelMode::Normalized {
        for i in 0..users {
            let scale = real.mean_power(i).sqrt().recip();
            let n = real.symbols;
            real.data[i * n..(i + 1) * n].iter_mut().for_each(|h| *h *= scale);
        }
    }
    Ok(real)
}

/// Per-resource-element complex noise variance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseConfig {
    pub sigma2: f64,
}

impl NoiseConfig {
    pub fn new(sigma2: f64) -> Result<Self> {
        if !(sigma2 >= 0.0) || !sigma2.is_finite() {
            return Err(Error::InvalidArgument(format!("noise variance {sigma2} must be finite and >= 0")));
        }
        Ok(NoiseConfig { sigma2 })
    }
}

/// One circularly-symmetric complex Gaussian sample with variance `sigma2`.
pub fn complex_gaussian(rng: &mut SimRng, sigma2: f64) -> Complex {
    let s = (sigma2 / 2.0).sqrt();
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex::new(s * re, s * im)
}

/// `Y = sum_i H[i, :] . X_i + N`, column by column.
///
/// Noise samples are drawn column-major even when `sigma2 = 0`, so the
/// random stream consumed does not depend on the noise level.
pub fn superimpose(
    grids: &[ResourceGrid],
    channel: &ChannelRealization,
    noise: NoiseConfig,
    rng: &mut SimRng,
) -> Result<ResourceGrid> {
    let first = grids.first().ok_or_else(|| Error::Shape("no user grids".into()))?;
    let (n_sc, n_sym) = first.shape();
    if grids.iter().any(|g| g.shape() != (n_sc, n_sym)) {
        return Err(Error::Shape("user grids differ in shape".into()));
    }
    if channel.users() != grids.len() || channel.symbols() != n_sym {
        return Err(Error::Shape(format!(
            "channel is {}x{}, grids need {}x{}",
            channel.users(),
            channel.symbols(),
            grids.len(),
            n_sym
        )));
    }
    let mut y = ResourceGrid::zeros(n_sc, n_sym);
    for t in 0..n_sym {
        for k in 0..n_sc {
            let mut acc = Complex::new(0.0, 0.0);
            for (i, g) in grids.iter().enumerate() {
                acc += channel.get(i, t) * g.get(k, t);
            }
            *y.get_mut(k, t) = acc + complex_gaussian(rng, noise.sigma2);
        }
    }
    Ok(y)
}

/// Noise variance for a target per-user Eb/N0.
///
/// Received energy per information bit is `mean_h2 * energy_per_codeword /
/// (bits * code_rate)`; `sigma2 = Eb / 10^(ebn0_db / 10)`.
pub fn ebn0_to_sigma2(ebn0_db: f64, bits: usize, code_rate: f64, energy_per_codeword: f64, mean_h2: f64) -> Result<f64> {
    if bits == 0 {
        return Err(Error::InvalidArgument("bits per codeword must be >= 1".into()));
    }
    if !(code_rate > 0.0 && code_rate <= 1.0) {
        return Err(Error::InvalidArgument(format!("code rate {code_rate} outside (0, 1]")));
    }
    if !(energy_per_codeword > 0.0) || !(mean_h2 > 0.0) {
        return Err(Error::InvalidArgument("energies must be positive".into()));
    }
    let eb = mean_h2 * energy_per_codeword / (bits as f64 * code_rate);
    Ok(eb / 10f64.powf(ebn0_db / 10.0))
}

/// Which bits an Eb/N0 figure is referenced to.
///
/// `PerUser` counts one user's information bits against that user's
/// received energy (the [`ebn0_to_sigma2`] convention). `Waveform` counts
/// the information bits of all `J` superimposed users against one
/// codeword's received energy, so the same noise variance reads
/// `10 log10(J)` dB lower.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EbN0Reference {
    PerUser,
    #[default]
    Waveform,
}

impl EbN0Reference {
    pub fn as_str(self) -> &'static str {
        match self {
            EbN0Reference::PerUser => "per-user",
            EbN0Reference::Waveform => "waveform",
        }
    }

    /// Noise variance for `ebn0_db` under this reference with `users`
    /// superimposed streams.
    pub fn sigma2(
        self,
        ebn0_db: f64,
        bits: usize,
        code_rate: f64,
        energy_per_codeword: f64,
        mean_h2: f64,
        users: usize,
    ) -> Result<f64> {
        let per_user = ebn0_to_sigma2(ebn0_db, bits, code_rate, energy_per_codeword, mean_h2)?;
        match self {
            EbN0Reference::PerUser => Ok(per_user),
            EbN0Reference::Waveform if users == 0 => Err(Error::InvalidArgument("users must be >= 1".into())),
            EbN0Reference::Waveform => Ok(per_user / users as f64),
        }
    }
}

impl std::str::FromStr for EbN0Reference {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "per-user" => Ok(EbN0Reference::PerUser),
            "waveform" => Ok(EbN0Reference::Waveform),
            other => Err(Error::Parse(format!("unknown Eb/N0 reference {other:?}"))),
        }
    }
}
