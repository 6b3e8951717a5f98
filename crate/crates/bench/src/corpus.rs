//! Seeded synthetic corpora: one directory per image with the noisy
//! acquisition, an optional independent second acquisition, the clean
//! expectation, its recipe and its truth row.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use semsnr_core::correlation::db;
use semsnr_core::raster::{load_pgm, save_pgm};
use semsnr_core::rng::derive_seed;
use semsnr_core::synth::{dose_from_field, simulate, smooth_field, EmissionModel, GroundTruth, NoiseRecipe};
use semsnr_core::Raster;

use crate::config::{Config, Flag, Section};
use crate::csvio::{num, read_checked, write_table};
use crate::error::{BenchError, Result};

pub const TRUTH_HEADER: [&str; 15] = [
    "image_id",
    "level",
    "seed",
    "stream",
    "model",
    "delta",
    "eta",
    "gain",
    "idc",
    "signal_energy",
    "noise_energy",
    "true_snr",
    "true_snr_db",
    "clamped",
    "second_true_snr",
];

pub const MANIFEST_HEADER: [&str; 9] =
    ["image_id", "level_index", "level", "seed_index", "scene_seed", "noise_seed", "noisy", "second", "clean"];

pub const MODELS: [&str; 6] = ["none", "poisson_pe", "poisson_se", "binomial_bse", "additive_gaussian", "impulse"];

/// Scene and detector settings shared by corpora and sweeps.
#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub width: usize,
    pub height: usize,
    pub bit_depth: u8,
    pub pole: f64,
    /// Mean intensity for the intensity-domain models.
    pub mean: f64,
    /// Spread of the scene relative to its mean.
    pub contrast: f64,
    pub model: String,
    pub delta: f64,
    pub eta: f64,
    pub gain: f64,
    pub idc: f64,
    pub inflation: f64,
}

impl Default for Scene {
    fn default() -> Self {
        Self {
            width: 256,
            height: 256,
            bit_depth: 8,
            pole: 0.97,
            mean: 128.0,
            contrast: 0.2,
            model: "additive_gaussian".into(),
            delta: 0.16,
            eta: 0.3,
            gain: 1.0,
            idc: 0.0,
            inflation: 1.0,
        }
    }
}

impl Scene {
    pub(crate) fn read(s: &mut Section, defaults: Scene) -> Result<Self> {
        let scene = Scene {
            width: s.get("width", defaults.width)?,
            height: s.get("height", defaults.height)?,
            bit_depth: s.get("bit_depth", defaults.bit_depth)?,
            pole: s.get("pole", defaults.pole)?,
            mean: s.get("mean", defaults.mean)?,
            contrast: s.get("contrast", defaults.contrast)?,
            model: s.get("model", defaults.model)?,
            delta: s.get("delta", defaults.delta)?,
            eta: s.get("eta", defaults.eta)?,
            gain: s.get("gain", defaults.gain)?,
            idc: s.get("idc", defaults.idc)?,
            inflation: s.get("inflation", defaults.inflation)?,
        };
        s.check("model", MODELS.contains(&scene.model.as_str()), format!("unknown emission model {:?}", scene.model))?;
        s.check("bit_depth", matches!(scene.bit_depth, 8 | 16), "must be 8 or 16")?;
        s.check("width", scene.width >= 16 && scene.height >= 16, "images must be at least 16x16")?;
        s.check("pole", (0.0..1.0).contains(&scene.pole), "must lie in [0, 1)")?;
        s.check("contrast", (0.0..1.0).contains(&scene.contrast), "must lie in [0, 1)")?;
        s.check("mean", scene.mean > 0.0, "must be positive")?;
        Ok(scene)
    }

    /// Whether `level` is a mean dose (counting models) rather than an SNR or fraction.
    pub fn level_is_dose(&self) -> bool {
        matches!(self.model.as_str(), "poisson_pe" | "poisson_se" | "binomial_bse")
    }

    /// Recipe for one acquisition. `level` is the target SNR for
    /// `additive_gaussian`, the mean dose for the counting models and the
    /// replaced fraction for `impulse`.
    pub fn recipe(&self, level: f64, scene_seed: u64, noise_seed: u64) -> Result<NoiseRecipe> {
        let field = smooth_field(self.width, self.height, self.pole, scene_seed)?;
        let base = if self.level_is_dose() { level } else { self.mean };
        let dose = dose_from_field(&field, self.width, self.height, self.bit_depth, base, self.contrast * base)?;
        let model = match self.model.as_str() {
            "none" => EmissionModel::None,
            "poisson_pe" => EmissionModel::PoissonPe,
            "poisson_se" => EmissionModel::PoissonSe,
            "binomial_bse" => EmissionModel::BinomialBse,
            "additive_gaussian" => {
                if !(level > 0.0) {
                    return Err(BenchError::Config(format!("target snr must be positive, got {level}")));
                }
                let var = self.gain * self.gain * dose.stats().variance / level;
                EmissionModel::AdditiveGaussian { sigma: var.sqrt() }
            }
            "impulse" => EmissionModel::Impulse { fraction: level },
            other => return Err(BenchError::Config(format!("unknown emission model {other:?}"))),
        };
        let mut r = NoiseRecipe::new(dose, model, noise_seed);
        r.se_yield = self.delta;
        r.bse_yield = self.eta;
        r.detector_gain = self.gain;
        r.dc_offset = self.idc;
        r.se_inflation = self.inflation;
        Ok(r)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorpusSpec {
    pub scene: Scene,
    pub levels: Vec<f64>,
    pub seeds: usize,
    pub seed: u64,
    pub pair: bool,
}

impl CorpusSpec {
    pub fn from_config(cfg: &Config, seed_override: Option<u64>) -> Result<Self> {
        if !cfg.has_section("corpus") {
            return Err(BenchError::Config("missing [corpus] section".into()));
        }
        let mut s = cfg.section("corpus");
        let scene = Scene::read(&mut s, Scene::default())?;
        let levels = s.list::<f64>("levels")?.unwrap_or_else(|| vec![1.0, 2.0, 5.0, 10.0, 20.0, 50.0]);
        let seeds = s.get("seeds", 3usize)?;
        let seed = s.get("seed", 1u64)?;
        let Flag(pair) = s.get("pair", Flag(true))?;
        s.check("levels", !levels.is_empty(), "needs at least one level")?;
        s.check("seeds", seeds >= 1, "needs at least one seed")?;
        s.finish()?;
        Ok(Self { scene, levels, seeds, seed: seed_override.unwrap_or(seed), pair })
    }

    pub fn items(&self) -> Vec<Item> {
        let mut out = Vec::with_capacity(self.levels.len() * self.seeds);
        for (li, &level) in self.levels.iter().enumerate() {
            for si in 0..self.seeds {
                let scene_seed = derive_seed(self.seed, si as u64);
                let noise_seed = derive_seed(scene_seed, li as u64 + 1);
                out.push(Item { id: format!("l{li:02}_s{si:03}"), level_index: li, level, seed_index: si, scene_seed, noise_seed });
            }
        }
        out
    }

    /// Ground truth for the first and, when paired, second acquisition.
    pub fn realize(&self, item: &Item) -> Result<(GroundTruth, Option<GroundTruth>)> {
        let mut r = self.scene.recipe(item.level, item.scene_seed, item.noise_seed)?;
        let a = simulate(&r)?;
        let b = if self.pair {
            r.stream = 1;
            Some(simulate(&r)?)
        } else {
            None
        };
        Ok((a, b))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Item {
    pub id: String,
    pub level_index: usize,
    pub level: f64,
    pub seed_index: usize,
    pub scene_seed: u64,
    pub noise_seed: u64,
}

fn recipe_text(spec: &CorpusSpec, item: &Item, r: &NoiseRecipe) -> String {
    let s = &spec.scene;
    let mut t = String::new();
    let mut kv = |k: &str, v: String| writeln!(t, "{k} = {v}").expect("string write");
    kv("image_id", item.id.clone());
    kv("scene", "smooth_field".into());
    kv("width", s.width.to_string());
    kv("height", s.height.to_string());
    kv("pole", num(s.pole));
    kv("scene_seed", item.scene_seed.to_string());
    kv("dose_mean", num(r.dose_map.stats().mean));
    kv("contrast", num(s.contrast));
    kv("model", r.model.name().into());
    match r.model {
        EmissionModel::AdditiveGaussian { sigma } => kv("sigma", num(sigma)),
        EmissionModel::Impulse { fraction } => kv("fraction", num(fraction)),
        _ => {}
    }
    kv("level", num(item.level));
    kv("se_yield", num(r.se_yield));
    kv("bse_yield", num(r.bse_yield));
    kv("se_inflation", num(r.se_inflation));
    kv("detector_gain", num(r.detector_gain));
    kv("dc_offset", num(r.dc_offset));
    kv("seed", r.seed.to_string());
    kv("bit_depth", r.bit_depth.to_string());
    t
}

fn truth_row(spec: &CorpusSpec, item: &Item, g: &GroundTruth, second: Option<&GroundTruth>) -> Vec<String> {
    let s = &spec.scene;
    vec![
        item.id.clone(),
        num(item.level),
        item.noise_seed.to_string(),
        "0".into(),
        s.model.clone(),
        num(s.delta),
        num(s.eta),
        num(s.gain),
        num(s.idc),
        num(g.signal_energy),
        num(g.noise_energy),
        num(g.true_snr),
        num(db(g.true_snr)),
        g.clamped.to_string(),
        second.map_or_else(String::new, |b| num(b.true_snr)),
    ]
}

pub(crate) fn pool(jobs: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| BenchError::Internal(format!("thread pool: {e}")))
}

fn mkdir(p: &Path) -> Result<()> {
    fs::create_dir_all(p).map_err(|e| BenchError::io(p, e))
}

/// Write the corpus under `out`; returns the number of images.
pub fn generate(spec: &CorpusSpec, out: &Path, jobs: usize) -> Result<usize> {
    mkdir(out)?;
    let items = spec.items();
    let rows: Vec<(Vec<String>, Vec<String>)> = pool(jobs)?.install(|| {
        items
            .par_iter()
            .map(|item| -> Result<(Vec<String>, Vec<String>)> {
                let (a, b) = spec.realize(item)?;
                let dir = out.join(&item.id);
                mkdir(&dir)?;
                save_pgm(&a.noisy, dir.join("noisy.pgm"))?;
                save_pgm(&a.clean, dir.join("clean.pgm"))?;
                if let Some(b) = &b {
                    save_pgm(&b.noisy, dir.join("second.pgm"))?;
                }
                let recipe = spec.scene.recipe(item.level, item.scene_seed, item.noise_seed)?;
                let rp = dir.join("recipe.txt");
                fs::write(&rp, recipe_text(spec, item, &recipe)).map_err(|e| BenchError::io(&rp, e))?;
                let truth = truth_row(spec, item, &a, b.as_ref());
                write_table(&dir.join("truth.csv"), &TRUTH_HEADER, std::slice::from_ref(&truth))?;
                let rel = |f: &str| format!("{}/{f}", item.id);
                let manifest = vec![
                    item.id.clone(),
                    item.level_index.to_string(),
                    num(item.level),
                    item.seed_index.to_string(),
                    item.scene_seed.to_string(),
                    item.noise_seed.to_string(),
                    rel("noisy.pgm"),
                    if b.is_some() { rel("second.pgm") } else { String::new() },
                    rel("clean.pgm"),
                ];
                Ok((truth, manifest))
            })
            .collect::<Result<Vec<_>>>()
    })?;
    let (truth, manifest): (Vec<_>, Vec<_>) = rows.into_iter().unzip();
    write_table(&out.join("truth.csv"), &TRUTH_HEADER, &truth)?;
    write_table(&out.join("manifest.csv"), &MANIFEST_HEADER, &manifest)?;
    Ok(truth.len())
}

/// One loaded corpus member.
#[derive(Debug, Clone)]
pub struct Entry {
    pub id: String,
    pub level: f64,
    pub seed_index: usize,
    pub noisy: PathBuf,
    pub second: Option<PathBuf>,
    pub clean: PathBuf,
    pub true_snr: f64,
}

impl Entry {
    pub fn load_noisy(&self) -> Result<Raster> {
        load(&self.noisy)
    }

    pub fn load_second(&self) -> Result<Option<Raster>> {
        self.second.as_deref().map(load).transpose()
    }

    pub fn load_clean(&self) -> Result<Raster> {
        load(&self.clean)
    }
}

fn load(p: &Path) -> Result<Raster> {
    load_pgm(p).map_err(|e| BenchError::Data(format!("{}: {e}", p.display())))
}

/// Read manifest.csv joined with truth.csv.
pub fn load_corpus(dir: &Path) -> Result<Vec<Entry>> {
    let manifest = read_checked(&dir.join("manifest.csv"), &MANIFEST_HEADER)?;
    let truth = read_checked(&dir.join("truth.csv"), &TRUTH_HEADER)?;
    let bad = |what: &str, id: &str| BenchError::Data(format!("manifest: bad {what} for {id}"));
    let mut out = Vec::with_capacity(manifest.len());
    for row in &manifest {
        let id = &row[0];
        let t = truth
            .iter()
            .find(|t| &t[0] == id)
            .ok_or_else(|| BenchError::Data(format!("truth.csv has no row for {id}")))?;
        let true_snr = crate::csvio::parse_num(&t[11]).ok_or_else(|| bad("true_snr", id))?;
        let noisy = dir.join(&row[6]);
        if !noisy.exists() {
            return Err(BenchError::Data(format!("missing image {}", noisy.display())));
        }
        out.push(Entry {
            id: id.clone(),
            level: row[2].parse().map_err(|_| bad("level", id))?,
            seed_index: row[3].parse().map_err(|_| bad("seed_index", id))?,
            noisy,
            second: (!row[7].is_empty()).then(|| dir.join(&row[7])),
            clean: dir.join(&row[8]),
            true_snr,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec() -> CorpusSpec {
        let cfg = Config::parse("[corpus]\nwidth=32\nheight=32\nlevels=2,5\nseeds=3\nseed=9\npole=0.9\n").unwrap();
        CorpusSpec::from_config(&cfg, None).unwrap()
    }

    #[test]
    fn item_ids_and_seeds() {
        let items = spec().items();
        assert_eq!(items.len(), 6);
        assert_eq!(items[4].id, "l01_s001");
        assert_eq!(items[1].scene_seed, items[4].scene_seed);
        assert_ne!(items[1].noise_seed, items[4].noise_seed);
    }

    #[test]
    fn unknown_model_names_key() {
        let cfg = Config::parse("[corpus]\nmodel = gaussian\n").unwrap();
        let e = CorpusSpec::from_config(&cfg, None).unwrap_err();
        assert_eq!(e.exit_code(), 2);
        assert!(e.to_string().contains("corpus.model"), "{e}");
    }

    #[test]
    fn target_snr_realized() {
        let cfg = Config::parse("[corpus]\nlevels=4\nseeds=1\n").unwrap();
        let s = CorpusSpec::from_config(&cfg, None).unwrap();
        let (a, b) = s.realize(&s.items()[0]).unwrap();
        assert!((a.true_snr / 4.0 - 1.0).abs() < 0.05, "{}", a.true_snr);
        assert_ne!(a.noisy, b.unwrap().noisy);
    }

    #[test]
    fn generate_and_load() {
        let dir = tempfile::tempdir().unwrap();
        let s = spec();
        assert_eq!(generate(&s, dir.path(), 2).unwrap(), 6);
        let entries = load_corpus(dir.path()).unwrap();
        assert_eq!(entries.len(), 6);
        let img = entries[0].load_noisy().unwrap();
        assert_eq!((img.width(), img.height()), (32, 32));
        assert!(entries[0].load_second().unwrap().is_some());
        let recipe = fs::read_to_string(dir.path().join("l00_s000/recipe.txt")).unwrap();
        assert!(recipe.contains("model = additive_gaussian"));
        fs::remove_file(dir.path().join("l01_s002/noisy.pgm")).unwrap();
        assert_eq!(load_corpus(dir.path()).unwrap_err().exit_code(), 3);
    }
}
