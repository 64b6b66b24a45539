use std::io::{BufRead, BufReader, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::Algorithm;
use super::sweep::{run_algorithm, RunSettings};
use crate::error::{Result, SrprError};
use crate::initialization::{InitSpec, RadiusLaw};
use crate::measurement::{generate_instance, CorruptionSpec, SensingEnsemble};
use crate::numeric;
use crate::smoothed_loss::{KernelKind, SmoothedLoss};
use crate::solvers::{IplConfig, SolveConfig};

/// Largest padded signal length accepted by [`run_image`].
pub const MAX_IMAGE_LEN: usize = 1 << 24;

/// RGB image with channel values in `[0, 1]`, stored row-major with
/// interleaved channels.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    pub width: usize,
    pub height: usize,
    pub data: Vec<f64>,
}

impl Image {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(SrprError::Format("image dimensions must be positive".into()));
        }
        if data.len() != 3 * width * height {
            return Err(SrprError::DimensionMismatch {
                expected: 3 * width * height,
                got: data.len(),
            });
        }
        Ok(Image { width, height, data })
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    /// 8-bit channel values, rounding and clamping.
    pub fn to_bytes(&self) -> Vec<u8> {
        self.data
            .iter()
            .map(|v| (v.clamp(0.0, 1.0) * 255.0).round() as u8)
            .collect()
    }

    pub fn from_bytes(width: usize, height: usize, bytes: &[u8]) -> Result<Self> {
        Image::new(width, height, bytes.iter().map(|&b| b as f64 / 255.0).collect())
    }

    /// Binary PPM (`P6`, maxval 255).
    pub fn write_ppm<W: Write>(&self, mut w: W) -> Result<()> {
        write!(w, "P6\n{} {}\n255\n", self.width, self.height)?;
        w.write_all(&self.to_bytes())?;
        w.flush()?;
        Ok(())
    }

    pub fn save_ppm(&self, path: &Path) -> Result<()> {
        self.write_ppm(std::io::BufWriter::new(std::fs::File::create(path)?))
    }

    /// Reads a binary PPM with 8-bit samples (maxval up to 255).
    pub fn read_ppm<R: Read>(r: R) -> Result<Self> {
        let mut r = BufReader::new(r);
        let magic = header_token(&mut r)?;
        if magic != "P6" {
            return Err(SrprError::Format(format!("expected P6 image, found {magic:?}")));
        }
        let mut number = |what: &str| -> Result<usize> {
            let t = header_token(&mut r)?;
            t.parse()
                .map_err(|_| SrprError::Format(format!("bad PPM {what}: {t:?}")))
        };
        let width = number("width")?;
        let height = number("height")?;
        let maxval = number("maxval")?;
        if maxval == 0 || maxval > 255 {
            return Err(SrprError::Format(format!("unsupported PPM maxval {maxval}")));
        }
        let mut bytes = vec![0u8; 3 * width * height];
        r.read_exact(&mut bytes)
            .map_err(|e| SrprError::Format(format!("truncated PPM data: {e}")))?;
        let data = bytes.iter().map(|&b| b as f64 / maxval as f64).collect();
        Image::new(width, height, data)
    }

    pub fn load_ppm(path: &Path) -> Result<Self> {
        Image::read_ppm(std::fs::File::open(path)?)
    }
}

/// Next whitespace-delimited header token, skipping `#` comments. Consumes
/// exactly one whitespace byte after the token.
fn header_token<R: BufRead>(r: &mut R) -> Result<String> {
    let mut token = Vec::new();
    let mut byte = [0u8; 1];
    loop {
        if r.read(&mut byte)? == 0 {
            if token.is_empty() {
                return Err(SrprError::Format("unexpected end of PPM header".into()));
            }
            break;
        }
        match byte[0] {
            b'#' if token.is_empty() => {
                let mut skip = Vec::new();
                r.read_until(b'\n', &mut skip)?;
            }
            c if c.is_ascii_whitespace() => {
                if !token.is_empty() {
                    break;
                }
            }
            c => token.push(c),
        }
    }
    String::from_utf8(token).map_err(|_| SrprError::Format("non-ASCII PPM header".into()))
}

/// A deterministic test picture: smooth color gradients with a disc, a
/// rectangle, a ring and a dark border, quantized to 8 bits.
pub fn synthetic_image(width: usize, height: usize) -> Result<Image> {
    let mut bytes = Vec::with_capacity(3 * width * height);
    let (w, h) = (width as f64, height as f64);
    for y in 0..height {
        for x in 0..width {
            let (u, v) = ((x as f64 + 0.5) / w, (y as f64 + 0.5) / h);
            let mut rgb = [0.15 + 0.7 * u, 0.2 + 0.6 * v, 0.9 - 0.6 * (u + v) / 2.0];
            let (dx, dy) = (u - 0.35, v - 0.4);
            let r = (dx * dx + dy * dy).sqrt();
            if r < 0.18 {
                rgb = [0.95, 0.85, 0.1];
            }
            if (0.6..0.85).contains(&u) && (0.55..0.8).contains(&v) {
                rgb = [0.1, 0.35 + 0.3 * u, 0.7];
            }
            let (ex, ey) = (u - 0.7, v - 0.25);
            let ring = (ex * ex + ey * ey).sqrt();
            if (0.1..0.14).contains(&ring) {
                rgb = [0.8, 0.1, 0.3];
            }
            if u < 0.05 || v < 0.05 || u > 0.95 || v > 0.95 {
                rgb = [0.0, 0.0, 0.0];
            }
            bytes.extend(rgb.iter().map(|c| (c.clamp(0.0, 1.0) * 255.0).round() as u8));
        }
    }
    Image::from_bytes(width, height, &bytes)
}

/// Image recovery from randomized Hadamard measurements. The finisher is
/// capped at 40 subproblems of at most 5000 dual iterations each.
#[derive(Debug, Clone)]
pub struct ImageTask {
    pub image: Image,
    pub k: usize,
    pub corruption: CorruptionSpec,
    /// Bandwidth `δ = delta0 / k`.
    pub delta0: f64,
    pub kernel: KernelKind,
    pub smooth: SolveConfig,
    pub ipl: IplConfig,
}

impl ImageTask {
    pub fn new(image: Image, k: usize, corruption: CorruptionSpec) -> Self {
        ImageTask {
            image,
            k,
            corruption,
            delta0: 0.01,
            kernel: KernelKind::PseudoHuber,
            smooth: SolveConfig {
                record_trace: false,
                ..SolveConfig::default()
            },
            ipl: IplConfig {
                max_outer: 40,
                max_inner: 5000,
                record_trace: false,
                ..IplConfig::default()
            },
        }
    }

    /// Padded signal length: the smallest power of two holding every channel value.
    pub fn padded_len(&self) -> usize {
        self.image.len().next_power_of_two()
    }

    pub fn delta(&self) -> f64 {
        self.delta0 / self.k as f64
    }
}

/// Success threshold for image recovery.
pub fn image_threshold(algorithm: Algorithm) -> f64 {
    if algorithm.is_pl() {
        1e-1
    } else {
        1e-6
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageRun {
    pub algorithm: String,
    pub status: String,
    pub iterations: usize,
    pub rel_error: f64,
    pub threshold: f64,
    pub success: bool,
    /// Whether the recovered 8-bit image equals the original.
    pub exact_pixels: bool,
    pub wall_nanos: u64,
}

#[derive(Debug, Clone)]
pub struct ImageReport {
    pub p: usize,
    pub n: usize,
    pub delta: f64,
    /// `‖x⋆‖/√p`
    pub c0: f64,
    pub runs: Vec<ImageRun>,
    /// Recovered image per run (`None` when the run failed).
    pub recovered: Vec<Option<Image>>,
}

impl ImageReport {
    pub fn write_metrics_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        for r in &self.runs {
            out.serialize(r)?;
        }
        out.flush()?;
        Ok(())
    }

    /// Writes `metrics.csv` and one `<algorithm>.ppm` per successful run.
    pub fn save(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir)?;
        let mut written = vec![dir.join("metrics.csv")];
        self.write_metrics_csv(std::fs::File::create(&written[0])?)?;
        for (run, img) in self.runs.iter().zip(&self.recovered) {
            if let Some(img) = img {
                let path = dir.join(format!("{}.ppm", run.algorithm));
                img.save_ppm(&path)?;
                written.push(path);
            }
        }
        Ok(written)
    }
}

/// Drops the padding, fixes the global sign so that pixel values are mostly
/// nonnegative, and clamps to `[0, 1]`.
fn unpad(x: &[f64], like: &Image) -> Image {
    let body = &x[..like.len()];
    let sign = if body.iter().sum::<f64>() < 0.0 { -1.0 } else { 1.0 };
    Image {
        width: like.width,
        height: like.height,
        data: body.iter().map(|v| (sign * v).clamp(0.0, 1.0)).collect(),
    }
}

/// Measures the zero-padded image with a randomized Hadamard ensemble of
/// ratio `k`, corrupts the measurements, and runs each algorithm. Random
/// starts have norm `√p/2`.
pub fn run_image(task: &ImageTask, algorithms: &[Algorithm], seed: u64) -> Result<ImageReport> {
    let p = task.padded_len();
    if p > MAX_IMAGE_LEN {
        return Err(SrprError::param("image", format!("padded length {p} exceeds {MAX_IMAGE_LEN}")));
    }
    if task.k == 0 {
        return Err(SrprError::param("k", "must be positive"));
    }
    let mut x_star = task.image.data.clone();
    x_star.resize(p, 0.0);
    let norm = numeric::norm(&x_star);
    if norm == 0.0 {
        return Err(SrprError::ZeroGroundTruth);
    }
    let ensemble = SensingEnsemble::hadamard(p, task.k, seed)?;
    let instance = generate_instance(ensemble, &x_star, task.corruption, seed)?;
    let loss = SmoothedLoss::new(task.kernel, task.delta())?;
    let settings = RunSettings {
        smooth: task.smooth,
        ipl: task.ipl,
        finisher: true,
    };
    let original = task.image.to_bytes();
    let mut runs = Vec::new();
    let mut recovered = Vec::new();
    for &alg in algorithms {
        let init = if alg.spectral() {
            InitSpec::spectral()
        } else {
            InitSpec::Random {
                radius: RadiusLaw::Fixed((p as f64).sqrt() / 2.0),
            }
        };
        let out = run_algorithm(&instance, loss, alg, init, &settings, seed);
        let img = out.x.as_deref().map(|x| unpad(x, &task.image));
        let threshold = image_threshold(alg);
        runs.push(ImageRun {
            algorithm: alg.name().into(),
            status: out.status,
            iterations: out.iterations,
            rel_error: out.rel_error,
            threshold,
            success: out.rel_error <= threshold,
            exact_pixels: img.as_ref().is_some_and(|i| i.to_bytes() == original),
            wall_nanos: out.wall_nanos,
        });
        recovered.push(img);
    }
    Ok(ImageReport {
        p,
        n: instance.n(),
        delta: task.delta(),
        c0: norm / (p as f64).sqrt(),
        runs,
        recovered,
    })
}
