//! Matrix files, run configuration files and result directories.
//!
//! Binary matrix layout: the 5 bytes `PPNM1`, the 3 bytes `f64`, rows and
//! cols as little-endian `u64`, then `rows * cols` little-endian `f64`
//! values in row-major order. The text alternative is CSV preceded by a
//! `# rows cols` line.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::gibbs::{Chain, SamplerConfig, UnmixResult};
use crate::model::{AbundanceMatrix, EndmemberMatrix, NoiseVariances, NonlinearityVector};
use crate::synth::{EndmemberSource, GroundTruth, MixingModel, NonlinearityTruth, SynthSpec};

pub const MAGIC: &[u8; 5] = b"PPNM1";
pub const DTYPE: &[u8; 3] = b"f64";
pub const HEADER_LEN: usize = 24;

/// Largest payload accepted on read, in values.
pub const MAX_VALUES: u64 = 1 << 31;

// ---------------------------------------------------------------------------
// Matrix files
// ---------------------------------------------------------------------------

pub fn encode_matrix(m: &DMatrix<f64>) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + 8 * m.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(DTYPE);
    out.extend_from_slice(&(m.nrows() as u64).to_le_bytes());
    out.extend_from_slice(&(m.ncols() as u64).to_le_bytes());
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            out.extend_from_slice(&m[(i, j)].to_le_bytes());
        }
    }
    out
}

pub fn decode_matrix(bytes: &[u8], path: &Path) -> Result<DMatrix<f64>> {
    let malformed = |msg: &str| Error::MalformedHeader {
        path: path.to_path_buf(),
        msg: msg.to_string(),
    };
    if bytes.len() < HEADER_LEN {
        return Err(malformed("file shorter than the 24-byte header"));
    }
    if &bytes[..5] != MAGIC {
        return Err(malformed("missing PPNM1 magic"));
    }
    if &bytes[5..8] != DTYPE {
        return Err(malformed("unsupported dtype tag"));
    }
    let rows = u64::from_le_bytes(bytes[8..16].try_into().expect("8 bytes"));
    let cols = u64::from_le_bytes(bytes[16..24].try_into().expect("8 bytes"));
    let count = rows
        .checked_mul(cols)
        .filter(|c| *c <= MAX_VALUES)
        .ok_or(Error::DimensionOverflow {
            path: path.to_path_buf(),
            rows,
            cols,
        })? as usize;
    let payload = &bytes[HEADER_LEN..];
    if payload.len() != 8 * count {
        return Err(Error::TruncatedPayload {
            path: path.to_path_buf(),
            expected: count,
            found: payload.len() / 8,
        });
    }
    let (rows, cols) = (rows as usize, cols as usize);
    let values: Vec<f64> = payload
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect();
    Ok(DMatrix::from_row_slice(rows, cols, &values))
}

pub fn write_matrix(m: &DMatrix<f64>, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode_matrix(m)).map_err(|e| Error::io(path, e))
}

/// CSV text; values printed with 17 significant digits.
pub fn matrix_to_csv(m: &DMatrix<f64>) -> String {
    let mut out = format!("# {} {}\n", m.nrows(), m.ncols());
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            if j > 0 {
                out.push(',');
            }
            let _ = write!(out, "{:.16e}", m[(i, j)]);
        }
        out.push('\n');
    }
    out
}

pub fn write_matrix_csv(m: &DMatrix<f64>, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, matrix_to_csv(m)).map_err(|e| Error::io(path, e))
}

pub fn parse_matrix_csv(text: &str, path: &Path) -> Result<DMatrix<f64>> {
    let err = |line: usize, msg: String| Error::CsvParse {
        path: path.to_path_buf(),
        line,
        msg,
    };
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    let (hline, header) = lines
        .by_ref()
        .find(|(_, l)| !l.trim().is_empty())
        .ok_or_else(|| err(1, "empty file".into()))?;
    let dims: Vec<&str> = header
        .trim()
        .strip_prefix('#')
        .ok_or_else(|| err(hline, "expected a `# rows cols` header".into()))?
        .split_whitespace()
        .collect();
    let [rows, cols] = dims[..] else {
        return Err(err(hline, "expected a `# rows cols` header".into()));
    };
    let parse_dim = |s: &str| {
        s.parse::<usize>()
            .map_err(|_| err(hline, format!("bad dimension `{s}`")))
    };
    let (rows, cols) = (parse_dim(rows)?, parse_dim(cols)?);
    if rows.checked_mul(cols).is_none_or(|c| c as u64 > MAX_VALUES) {
        return Err(err(hline, format!("dimensions {rows} x {cols} overflow")));
    }
    let mut values = Vec::with_capacity(rows * cols);
    let mut seen = 0;
    for (ln, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        seen += 1;
        if seen > rows {
            return Err(err(ln, format!("more than the declared {rows} rows")));
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != cols {
            return Err(err(ln, format!("{} fields, header declares {cols}", fields.len())));
        }
        for f in fields {
            let v = f
                .trim()
                .parse::<f64>()
                .map_err(|_| err(ln, format!("not a number: `{}`", f.trim())))?;
            values.push(v);
        }
    }
    if seen != rows {
        return Err(err(
            text.lines().count().max(1),
            format!("{seen} rows, header declares {rows}"),
        ));
    }
    Ok(DMatrix::from_row_slice(rows, cols, &values))
}

/// Reads a binary or CSV matrix, telling them apart by the magic bytes.
pub fn read_matrix(path: impl AsRef<Path>) -> Result<DMatrix<f64>> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.starts_with(MAGIC) {
        return decode_matrix(&bytes, path);
    }
    let text = std::str::from_utf8(&bytes).map_err(|_| Error::MalformedHeader {
        path: path.to_path_buf(),
        msg: "neither a PPNM1 file nor UTF-8 text".into(),
    })?;
    parse_matrix_csv(text, path)
}

fn read_vector(path: &Path) -> Result<DVector<f64>> {
    let m = read_matrix(path)?;
    if m.ncols() != 1 {
        return Err(Error::Dimension(format!(
            "{}: expected a single column, found {}",
            path.display(),
            m.ncols()
        )));
    }
    Ok(m.column(0).into_owned())
}

fn column_matrix(v: &DVector<f64>) -> DMatrix<f64> {
    DMatrix::from_column_slice(v.len(), 1, v.as_slice())
}

// ---------------------------------------------------------------------------
// Run configuration
// ---------------------------------------------------------------------------

/// Recognized configuration keys.
pub const CONFIG_KEYS: &[&str] = &[
    // sampler
    "n_mc",
    "n_burn",
    "thin",
    "seed",
    "inner_steps",
    "epsilon_z",
    "epsilon_m",
    "nlf_min",
    "nlf_max",
    "adapt_window",
    "adapt_low",
    "adapt_high",
    "adapt_factor",
    // priors
    "s2",
    "gamma",
    "nu",
    // scene
    "rows",
    "cols",
    "endmembers",
    "bands",
    "model",
    "a_max",
    "noise_sigma2",
    "b_min",
    "b_max",
    "b_min_abs",
    "gamma_min",
    "gamma_max",
    "endmember_file",
];

const SAMPLER_KEYS: &[&str] = &[
    "n_mc", "n_burn", "thin", "seed", "inner_steps", "epsilon_z", "epsilon_m", "nlf_min",
    "nlf_max", "adapt_window", "adapt_low", "adapt_high", "adapt_factor", "s2", "gamma", "nu",
];

/// Sampler, prior and scene settings read from a flat `key = value` file.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub sampler: SamplerConfig,
    pub synth: SynthSpec,
    /// Endmember file for the scene generator, relative paths resolved against the config file.
    pub endmember_file: Option<PathBuf>,
    /// The text the config was parsed from.
    pub source: String,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            sampler: SamplerConfig::default(),
            synth: SynthSpec::default(),
            endmember_file: None,
            source: String::new(),
        }
    }
}

fn parse_value<T: FromStr>(path: &Path, line: usize, key: &str, v: &str) -> Result<T> {
    v.parse::<T>().map_err(|_| Error::ConfigParse {
        path: path.to_path_buf(),
        line,
        msg: format!("invalid value `{v}` for `{key}`"),
    })
}

impl RunConfig {
    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        let mut cfg = RunConfig {
            source: text.to_string(),
            ..RunConfig::default()
        };
        let mut lines_of: HashMap<&'static str, usize> = HashMap::new();
        let s = &mut cfg.sampler;
        let sp = &mut cfg.synth;
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let located = |msg: String| Error::ConfigParse {
                path: path.to_path_buf(),
                line,
                msg,
            };
            let (key, value) = content
                .split_once('=')
                .ok_or_else(|| located(format!("expected `key = value`, found `{content}`")))?;
            let (key, v) = (key.trim(), value.trim());
            let known = CONFIG_KEYS
                .iter()
                .find(|k| **k == key)
                .ok_or_else(|| located(format!("unknown key `{key}`")))?;
            if lines_of.insert(known, line).is_some() {
                return Err(located(format!("duplicate key `{key}`")));
            }
            let f = |v: &str| parse_value::<f64>(path, line, key, v);
            let u = |v: &str| parse_value::<usize>(path, line, key, v);
            match key {
                "n_mc" => s.n_mc = u(v)?,
                "n_burn" => s.n_burn = u(v)?,
                "thin" => s.thin = u(v)?,
                "seed" => {
                    let seed = parse_value::<u64>(path, line, key, v)?;
                    s.seed = seed;
                    sp.seed = seed;
                }
                "inner_steps" => s.inner_steps = u(v)?,
                "epsilon_z" => s.chmc_z.epsilon = f(v)?,
                "epsilon_m" => s.chmc_m.epsilon = f(v)?,
                "nlf_min" => {
                    let n = u(v)?;
                    s.chmc_z.nlf_min = n;
                    s.chmc_m.nlf_min = n;
                }
                "nlf_max" => {
                    let n = u(v)?;
                    s.chmc_z.nlf_max = n;
                    s.chmc_m.nlf_max = n;
                }
                "adapt_window" => {
                    let n = u(v)?;
                    s.chmc_z.adapt_window = n;
                    s.chmc_m.adapt_window = n;
                }
                "adapt_low" => {
                    let x = f(v)?;
                    s.chmc_z.adapt_low = x;
                    s.chmc_m.adapt_low = x;
                }
                "adapt_high" => {
                    let x = f(v)?;
                    s.chmc_z.adapt_high = x;
                    s.chmc_m.adapt_high = x;
                }
                "adapt_factor" => {
                    let x = f(v)?;
                    s.chmc_z.adapt_factor = x;
                    s.chmc_m.adapt_factor = x;
                }
                "s2" => s.priors.s2 = f(v)?,
                "gamma" => s.priors.gamma = f(v)?,
                "nu" => s.priors.nu = f(v)?,
                "rows" => sp.n_rows = u(v)?,
                "cols" => sp.n_cols = u(v)?,
                "endmembers" => sp.n_endmembers = u(v)?,
                "bands" => sp.n_bands = u(v)?,
                "model" => sp.model = MixingModel::from_str(v).map_err(|e| located(e.to_string()))?,
                "a_max" => sp.a_max = f(v)?,
                "noise_sigma2" => sp.noise_sigma2 = f(v)?,
                "b_min" => sp.b_range[0] = f(v)?,
                "b_max" => sp.b_range[1] = f(v)?,
                "b_min_abs" => sp.b_min_abs = f(v)?,
                "gamma_min" => sp.gamma_range[0] = f(v)?,
                "gamma_max" => sp.gamma_range[1] = f(v)?,
                "endmember_file" => {
                    let p = PathBuf::from(v);
                    cfg.endmember_file = Some(match path.parent() {
                        Some(dir) if p.is_relative() => dir.join(p),
                        _ => p,
                    });
                }
                _ => unreachable!("key list and match arms agree"),
            }
        }

        // Cross-field checks are reported at the last line of the group involved.
        let last_line = |keys: &mut dyn Iterator<Item = &&str>| {
            keys.filter_map(|k| lines_of.get(*k).copied()).max().unwrap_or(0)
        };
        if let Err(e) = cfg.sampler.validate() {
            return Err(Error::ConfigParse {
                path: path.to_path_buf(),
                line: last_line(&mut SAMPLER_KEYS.iter()),
                msg: e.to_string(),
            });
        }
        if let Err(e) = cfg.synth.validate() {
            return Err(Error::ConfigParse {
                path: path.to_path_buf(),
                line: last_line(&mut CONFIG_KEYS.iter().filter(|k| !SAMPLER_KEYS.contains(k))),
                msg: e.to_string(),
            });
        }
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, path)
    }

    /// Overrides the seed of both the sampler and the scene generator.
    pub fn set_seed(&mut self, seed: u64) {
        self.sampler.seed = seed;
        self.synth.seed = seed;
    }

    /// Loads the user endmember file, if any, into the scene spec.
    pub fn resolve_endmembers(&mut self) -> Result<()> {
        if let Some(p) = &self.endmember_file {
            let m = EndmemberMatrix::new(read_matrix(p)?)?;
            self.synth.endmembers = EndmemberSource::User(m);
            self.synth.validate()?;
        }
        Ok(())
    }
}

/// Writes the configuration text verbatim, plus a trailing line for a
/// command-line seed override when there was one.
pub fn echo_config(dir: &Path, cfg: &RunConfig, seed_override: Option<u64>) -> Result<()> {
    let mut text = cfg.source.clone();
    if let Some(seed) = seed_override {
        if !text.is_empty() && !text.ends_with('\n') {
            text.push('\n');
        }
        let _ = writeln!(text, "# --seed {seed}");
    }
    let path = dir.join(CONFIG_ECHO);
    fs::write(&path, text).map_err(|e| Error::io(path, e))
}

pub const CONFIG_ECHO: &str = "config.txt";

pub fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn write_text(path: PathBuf, text: &str) -> Result<()> {
    fs::write(&path, text).map_err(|e| Error::io(path, e))
}

/// Parses `key=value` lines into a map; used for small summary files.
pub fn read_key_values(path: &Path) -> Result<HashMap<String, String>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut out = HashMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| Error::ConfigParse {
            path: path.to_path_buf(),
            line: i + 1,
            msg: "expected key=value".into(),
        })?;
        out.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(out)
}

fn kv_f64(map: &HashMap<String, String>, key: &str, path: &Path) -> Result<f64> {
    map.get(key)
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| Error::MalformedHeader {
            path: path.to_path_buf(),
            msg: format!("missing or invalid `{key}`"),
        })
}

// ---------------------------------------------------------------------------
// Scene directories
// ---------------------------------------------------------------------------

pub const IMAGE_FILE: &str = "image.ppnm";
pub const M_TRUE_FILE: &str = "m_true.ppnm";
pub const A_TRUE_FILE: &str = "a_true.ppnm";
pub const B_TRUE_FILE: &str = "b_true.ppnm";
pub const GAMMA_TRUE_FILE: &str = "gamma_true.ppnm";
pub const CLEAN_FILE: &str = "clean.ppnm";
pub const TRUTH_SUMMARY: &str = "truth.txt";

pub fn write_truth(dir: &Path, y: &DMatrix<f64>, truth: &GroundTruth, spec: &SynthSpec) -> Result<()> {
    write_matrix(y, dir.join(IMAGE_FILE))?;
    write_matrix(truth.m_true.data(), dir.join(M_TRUE_FILE))?;
    write_matrix(truth.a_true.data(), dir.join(A_TRUE_FILE))?;
    write_matrix(&truth.clean, dir.join(CLEAN_FILE))?;
    match &truth.nonlinearity {
        NonlinearityTruth::None => {}
        NonlinearityTruth::Polynomial(b) => write_matrix(&column_matrix(b), dir.join(B_TRUE_FILE))?,
        NonlinearityTruth::Bilinear(g) => write_matrix(g, dir.join(GAMMA_TRUE_FILE))?,
    }
    let mut text = String::new();
    let _ = writeln!(text, "model={}", spec.model.name());
    let _ = writeln!(text, "rows={}", spec.n_rows);
    let _ = writeln!(text, "cols={}", spec.n_cols);
    let _ = writeln!(text, "sigma2_true={:.17e}", truth.sigma2_true);
    if truth.sigma2_true > 0.0 {
        let _ = writeln!(text, "snr_db={:.17e}", crate::synth::snr_db(&truth.clean, truth.sigma2_true));
    }
    write_text(dir.join(TRUTH_SUMMARY), &text)
}

/// Ground-truth endmembers and abundances of a scene directory.
pub struct SceneTruth {
    pub image: DMatrix<f64>,
    pub m_true: EndmemberMatrix,
    pub a_true: AbundanceMatrix,
    pub b_true: Option<DVector<f64>>,
}

pub fn read_truth(dir: &Path) -> Result<SceneTruth> {
    let b_path = dir.join(B_TRUE_FILE);
    Ok(SceneTruth {
        image: read_matrix(dir.join(IMAGE_FILE))?,
        m_true: EndmemberMatrix::new(read_matrix(dir.join(M_TRUE_FILE))?)?,
        a_true: AbundanceMatrix::new(read_matrix(dir.join(A_TRUE_FILE))?)?,
        b_true: if b_path.exists() {
            Some(read_vector(&b_path)?)
        } else {
            None
        },
    })
}

// ---------------------------------------------------------------------------
// Result directories
// ---------------------------------------------------------------------------

pub const A_HAT_FILE: &str = "a_hat.ppnm";
pub const M_HAT_FILE: &str = "m_hat.ppnm";
pub const B_HAT_FILE: &str = "b_hat.ppnm";
pub const B_PROB_FILE: &str = "b_prob.ppnm";
pub const SIGMA2_HAT_FILE: &str = "sigma2_hat.ppnm";
pub const HYPER_FILE: &str = "hyper.txt";
pub const B_MAP_FILE: &str = "b_map.ppnm";
pub const B_PROB_MAP_FILE: &str = "b_prob_map.ppnm";
pub const TRACE_FILE: &str = "trace.ppnm";
pub const ACCEPTANCE_FILE: &str = "acceptance.ppnm";
pub const PRIOR_MEANS_FILE: &str = "prior_means.ppnm";

pub fn abundance_map_file(r: usize) -> String {
    format!("a_map_{r}.ppnm")
}

/// Writes the MMSE estimates.
pub fn write_unmix_result(dir: &Path, res: &UnmixResult) -> Result<()> {
    write_matrix(res.a_hat.data(), dir.join(A_HAT_FILE))?;
    write_matrix(res.m_hat.data(), dir.join(M_HAT_FILE))?;
    write_matrix(&column_matrix(res.b_hat.data()), dir.join(B_HAT_FILE))?;
    write_matrix(&column_matrix(&res.b_nonzero_prob), dir.join(B_PROB_FILE))?;
    write_matrix(&column_matrix(res.sigma2_hat.data()), dir.join(SIGMA2_HAT_FILE))?;
    let text = format!(
        "sigma_b2_hat={:.17e}\nw_hat={:.17e}\n",
        res.sigma_b2_hat, res.w_hat
    );
    write_text(dir.join(HYPER_FILE), &text)
}

pub fn read_unmix_result(dir: &Path) -> Result<UnmixResult> {
    let hyper_path = dir.join(HYPER_FILE);
    let hyper = read_key_values(&hyper_path)?;
    Ok(UnmixResult {
        a_hat: AbundanceMatrix::new(read_matrix(dir.join(A_HAT_FILE))?)?,
        m_hat: EndmemberMatrix::new(read_matrix(dir.join(M_HAT_FILE))?)?,
        b_hat: NonlinearityVector::new(read_vector(&dir.join(B_HAT_FILE))?)?,
        b_nonzero_prob: read_vector(&dir.join(B_PROB_FILE))?,
        sigma2_hat: NoiseVariances::new(read_vector(&dir.join(SIGMA2_HAT_FILE))?)?,
        sigma_b2_hat: kv_f64(&hyper, "sigma_b2_hat", &hyper_path)?,
        w_hat: kv_f64(&hyper, "w_hat", &hyper_path)?,
    })
}

/// Abundance and nonlinearity maps as `rows x cols` grids, pixel `n` at
/// row `n / cols`, column `n % cols`.
pub fn write_maps(dir: &Path, res: &UnmixResult, rows: usize, cols: usize) -> Result<()> {
    let grid = |v: &[f64]| DMatrix::from_row_slice(rows, cols, v);
    for r in 0..res.a_hat.n_endmembers() {
        let row: Vec<f64> = res.a_hat.data().row(r).iter().copied().collect();
        write_matrix(&grid(&row), dir.join(abundance_map_file(r)))?;
    }
    write_matrix(&grid(res.b_hat.as_slice()), dir.join(B_MAP_FILE))?;
    write_matrix(&grid(res.b_nonzero_prob.as_slice()), dir.join(B_PROB_MAP_FILE))
}

/// Per-iteration CHMC bookkeeping columns of the acceptance file.
pub const ACCEPTANCE_COLUMNS: [&str; 6] = [
    "accept_z",
    "accept_m",
    "divergences_z",
    "divergences_m",
    "epsilon_z",
    "epsilon_m",
];

pub fn write_chain(dir: &Path, chain: &Chain) -> Result<()> {
    write_matrix(&chain.scalar_trace(), dir.join(TRACE_FILE))?;
    let n = chain.accept_z.len();
    let acc = DMatrix::from_fn(n, ACCEPTANCE_COLUMNS.len(), |i, c| match c {
        0 => chain.accept_z[i],
        1 => chain.accept_m[i],
        2 => chain.divergences_z[i] as f64,
        3 => chain.divergences_m[i] as f64,
        4 => chain.epsilon_z[i],
        _ => chain.epsilon_m[i],
    });
    write_matrix(&acc, dir.join(ACCEPTANCE_FILE))?;
    write_matrix(chain.mbar.data(), dir.join(PRIOR_MEANS_FILE))?;
    let mut text = String::new();
    let _ = writeln!(text, "kept={}", chain.samples.len());
    let _ = writeln!(text, "n_burn={}", chain.n_burn);
    let _ = writeln!(text, "adapt_events_z={}", chain.adapt_events_z.len());
    let _ = writeln!(text, "adapt_events_m={}", chain.adapt_events_m.len());
    if let (Some(ez), Some(em)) = (chain.epsilon_z.last(), chain.epsilon_m.last()) {
        let _ = writeln!(text, "final_epsilon_z={ez:.17e}");
        let _ = writeln!(text, "final_epsilon_m={em:.17e}");
    }
    write_text(dir.join("chain.txt"), &text)
}

/// Reads a trace file and, when present next to it, the acceptance file.
/// Acceptance statistics cover post-burn-in iterations only.
pub fn read_trace(path: &Path) -> Result<crate::metrics::ScalarTrace> {
    let (trace_path, dir) = if path.is_dir() {
        (path.join(TRACE_FILE), path.to_path_buf())
    } else {
        (
            path.to_path_buf(),
            path.parent().map(Path::to_path_buf).unwrap_or_default(),
        )
    };
    let values = read_matrix(&trace_path)?;
    if values.ncols() != Chain::TRACE_NAMES.len() {
        return Err(Error::Dimension(format!(
            "{}: {} trace columns, expected {}",
            trace_path.display(),
            values.ncols(),
            Chain::TRACE_NAMES.len()
        )));
    }
    let mut trace = crate::metrics::ScalarTrace {
        names: Chain::TRACE_NAMES.iter().map(|s| s.to_string()).collect(),
        values,
        accept_z: Vec::new(),
        accept_m: Vec::new(),
        divergences_z: 0,
        divergences_m: 0,
    };
    let acc_path = dir.join(ACCEPTANCE_FILE);
    if acc_path.exists() {
        let acc = read_matrix(&acc_path)?;
        if acc.ncols() != ACCEPTANCE_COLUMNS.len() {
            return Err(Error::Dimension(format!(
                "{}: {} columns, expected {}",
                acc_path.display(),
                acc.ncols(),
                ACCEPTANCE_COLUMNS.len()
            )));
        }
        let n_burn = read_key_values(&dir.join("chain.txt"))
            .ok()
            .and_then(|m| m.get("n_burn").and_then(|v| v.parse::<usize>().ok()))
            .unwrap_or(0)
            .min(acc.nrows());
        trace.accept_z = acc.column(0).iter().skip(n_burn).copied().collect();
        trace.accept_m = acc.column(1).iter().skip(n_burn).copied().collect();
        trace.divergences_z = acc.column(2).iter().sum::<f64>() as usize;
        trace.divergences_m = acc.column(3).iter().sum::<f64>() as usize;
    }
    Ok(trace)
}
