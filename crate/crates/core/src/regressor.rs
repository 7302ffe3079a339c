//! Ordinary least squares for the three score equations, their diagnostics,
//! persistence, and the training procedure that produces them.
//!
//! Each score is a linear probability model: readable windows are labelled 1,
//! control sequences 0, and a candidate's score is
//! `constant + Σ coefficient · feature` with no clamping.
//!
//! Fitting works on standardized columns: features are centered and scaled
//! to unit variance, the normal equations `(ZᵀZ + ridge·n·I) β = Zᵀ(y − ȳ)`
//! are solved by Cholesky factorization, and the coefficients are mapped back
//! to the raw feature scale. The ridge term is therefore relative to the
//! column variances and is recorded in the model.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::hexfloat;
use crate::lexicon::{Lexicon, WordFeatures};
use crate::ngram::{NgramModel, QptFeatures};
use crate::pathfinder::{gen_control, path_features, sample_windows, PathConfig, PathFeatures, Prng, UnigramDist};
use crate::textcore::{Corpus, Seq};

pub const DEFAULT_RIDGE: f64 = 1e-8;

/// Labelled feature vectors for a two-class fit.
#[derive(Debug, Clone, Default)]
pub struct TrainingSet {
    rows: Vec<Vec<f64>>,
    labels: Vec<f64>,
}

impl TrainingSet {
    pub fn new(rows: Vec<(Vec<f64>, u8)>) -> Result<Self> {
        let mut set = TrainingSet::default();
        for (features, label) in rows {
            set.push(features, label)?;
        }
        set.validate()?;
        Ok(set)
    }

    pub fn push(&mut self, features: Vec<f64>, label: u8) -> Result<()> {
        if label > 1 {
            return Err(Error::Training(format!("label {label} is not 0 or 1")));
        }
        if let Some(first) = self.rows.first() {
            if first.len() != features.len() {
                return Err(Error::Arity {
                    expected: first.len(),
                    got: features.len(),
                });
            }
        }
        self.rows.push(features);
        self.labels.push(label as f64);
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let positives = self.labels.iter().filter(|&&y| y == 1.0).count();
        if positives == 0 || positives == self.labels.len() {
            return Err(Error::Training("both labels 0 and 1 are required".into()));
        }
        Ok(())
    }

    #[allow(clippy::len_without_is_empty)]
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn labels(&self) -> &[f64] {
        &self.labels
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    pub name: String,
    pub feature_names: Vec<String>,
    pub constant: f64,
    pub coefficients: Vec<f64>,
    pub r_squared: f64,
    /// Coefficient divided by its standard error, one per feature.
    pub t_values: Vec<f64>,
    pub n_samples: usize,
    pub ridge: f64,
    pub seed: Option<u64>,
}

/// Two-class fit of a [`TrainingSet`].
pub fn fit_ols(data: &TrainingSet, ridge: f64) -> Result<LinearModel> {
    data.validate()?;
    fit_least_squares(data.rows(), data.labels(), ridge)
}

/// Least squares with an intercept for arbitrary responses.
pub fn fit_least_squares(rows: &[Vec<f64>], ys: &[f64], ridge: f64) -> Result<LinearModel> {
    let n = rows.len();
    if n != ys.len() {
        return Err(Error::Training(format!("{n} feature rows but {} responses", ys.len())));
    }
    let p = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != p) {
        return Err(Error::Training("feature rows differ in arity".into()));
    }
    if n <= p + 1 {
        return Err(Error::Training(format!("{n} samples cannot fit {p} coefficients and a constant")));
    }
    if !(ridge >= 0.0 && ridge.is_finite()) {
        return Err(Error::Training(format!("ridge {ridge} must be finite and non-negative")));
    }
    if rows.iter().flatten().chain(ys).any(|v| !v.is_finite()) {
        return Err(Error::Training("non-finite value in training data".into()));
    }

    let nf = n as f64;
    let y_mean = ys.iter().sum::<f64>() / nf;
    let means: Vec<f64> = (0..p).map(|j| rows.iter().map(|r| r[j]).sum::<f64>() / nf).collect();
    let scales: Vec<f64> = (0..p)
        .map(|j| {
            let var = rows.iter().map(|r| (r[j] - means[j]).powi(2)).sum::<f64>() / nf;
            if var > 0.0 {
                var.sqrt()
            } else {
                1.0
            }
        })
        .collect();
    let sst: f64 = ys.iter().map(|y| (y - y_mean).powi(2)).sum();
    if sst == 0.0 {
        return Err(Error::Training("response is constant".into()));
    }

    let mut gram = vec![vec![0.0; p]; p];
    let mut rhs = vec![0.0; p];
    let mut z = vec![0.0; p];
    for (r, &y) in rows.iter().zip(ys) {
        for j in 0..p {
            z[j] = (r[j] - means[j]) / scales[j];
        }
        for i in 0..p {
            rhs[i] += z[i] * (y - y_mean);
            for j in 0..=i {
                gram[i][j] += z[i] * z[j];
            }
        }
    }
    for i in 0..p {
        let (upper, lower) = gram.split_at_mut(i);
        let row = &mut lower[0];
        row[i] += ridge * nf;
        for (j, above) in upper.iter_mut().enumerate() {
            above[i] = row[j];
        }
    }

    let chol = Cholesky::factor(&gram)?;
    let beta_std = chol.solve(&rhs);
    let coefficients: Vec<f64> = beta_std.iter().zip(&scales).map(|(b, s)| b / s).collect();
    let constant = y_mean - coefficients.iter().zip(&means).map(|(b, m)| b * m).sum::<f64>();

    let ssr: f64 = rows
        .iter()
        .zip(ys)
        .map(|(r, y)| {
            let fit = constant + r.iter().zip(&coefficients).map(|(x, b)| x * b).sum::<f64>();
            (y - fit).powi(2)
        })
        .sum();
    let sigma2 = ssr / (n - p - 1) as f64;
    let t_values = (0..p)
        .map(|j| {
            let mut e = vec![0.0; p];
            e[j] = 1.0;
            let var = sigma2 * chol.solve(&e)[j];
            beta_std[j] / var.sqrt()
        })
        .collect();

    Ok(LinearModel {
        name: String::from("model"),
        feature_names: (1..=p).map(|j| format!("x{j}")).collect(),
        constant,
        coefficients,
        r_squared: (1.0 - ssr / sst).clamp(0.0, 1.0),
        t_values,
        n_samples: n,
        ridge,
        seed: None,
    })
}

struct Cholesky {
    lower: Vec<Vec<f64>>,
}

impl Cholesky {
    fn factor(a: &[Vec<f64>]) -> Result<Self> {
        let p = a.len();
        let max_diag = (0..p).map(|i| a[i][i].abs()).fold(0.0, f64::max);
        let mut lower = vec![vec![0.0; p]; p];
        for i in 0..p {
            for j in 0..=i {
                let s: f64 = a[i][j] - (0..j).map(|k| lower[i][k] * lower[j][k]).sum::<f64>();
                if i == j {
                    if s <= max_diag * 1e-13 || s <= 0.0 {
                        return Err(Error::Singular { column: i });
                    }
                    lower[i][i] = s.sqrt();
                } else {
                    lower[i][j] = s / lower[j][j];
                }
            }
        }
        Ok(Cholesky { lower })
    }

    fn solve(&self, b: &[f64]) -> Vec<f64> {
        let p = b.len();
        let l = &self.lower;
        let mut y = vec![0.0; p];
        for i in 0..p {
            y[i] = (b[i] - (0..i).map(|k| l[i][k] * y[k]).sum::<f64>()) / l[i][i];
        }
        let mut x = vec![0.0; p];
        for i in (0..p).rev() {
            x[i] = (y[i] - (i + 1..p).map(|k| l[k][i] * x[k]).sum::<f64>()) / l[i][i];
        }
        x
    }
}

impl LinearModel {
    pub fn with_names(mut self, name: &str, features: &[&str]) -> Result<Self> {
        if features.len() != self.coefficients.len() {
            return Err(Error::Arity {
                expected: self.coefficients.len(),
                got: features.len(),
            });
        }
        self.name = name.to_owned();
        self.feature_names = features.iter().map(|&f| f.to_owned()).collect();
        Ok(self)
    }

    pub fn arity(&self) -> usize {
        self.coefficients.len()
    }

    pub fn score(&self, features: &[f64]) -> Result<f64> {
        if features.len() != self.arity() {
            return Err(Error::Arity {
                expected: self.arity(),
                got: features.len(),
            });
        }
        Ok(self.score_unchecked(features))
    }

    /// [`LinearModel::score`] without the arity check.
    #[inline]
    pub fn score_unchecked(&self, features: &[f64]) -> f64 {
        self.constant + features.iter().zip(&self.coefficients).map(|(x, b)| x * b).sum::<f64>()
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str("# gridsieve linear model; hexadecimal floats are exact, decimals are comments\n");
        let _ = writeln!(out, "model\t{}", self.name);
        let _ = writeln!(out, "n_samples\t{}", self.n_samples);
        match self.seed {
            Some(s) => {
                let _ = writeln!(out, "seed\t{s}");
            }
            None => out.push_str("seed\tnone\n"),
        }
        let _ = writeln!(out, "ridge\t{}\t# {:e}", hexfloat::format(self.ridge), self.ridge);
        let _ = writeln!(out, "r_squared\t{}\t# {:.6}", hexfloat::format(self.r_squared), self.r_squared);
        let _ = writeln!(out, "constant\t{}\t# {:e}", hexfloat::format(self.constant), self.constant);
        for ((name, c), t) in self.feature_names.iter().zip(&self.coefficients).zip(&self.t_values) {
            let _ = writeln!(
                out,
                "feature\t{name}\t{}\t{}\t# coefficient {c:e}, t {t:.3}",
                hexfloat::format(*c),
                hexfloat::format(*t)
            );
        }
        out
    }

    pub fn parse(text: &str, context: &str) -> Result<Self> {
        let mut name = None;
        let mut n_samples = None;
        let mut seed = None;
        let mut ridge = None;
        let mut r_squared = None;
        let mut constant = None;
        let (mut feature_names, mut coefficients, mut t_values) = (Vec::new(), Vec::new(), Vec::new());
        for (idx, raw) in text.lines().enumerate() {
            let lineno = idx + 1;
            let line = raw.split_once("\t#").map_or(raw, |(l, _)| l);
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            let hex = |s: &str| hexfloat::parse(s).ok_or_else(|| Error::parse(context, lineno, format!("bad float {s:?}")));
            let bad = || Error::parse(context, lineno, format!("malformed line {raw:?}"));
            match fields[..] {
                ["model", n] => name = Some(n.to_owned()),
                ["n_samples", n] => n_samples = Some(n.parse::<usize>().map_err(|_| bad())?),
                ["seed", "none"] => seed = Some(None),
                ["seed", s] => seed = Some(Some(s.parse::<u64>().map_err(|_| bad())?)),
                ["ridge", v] => ridge = Some(hex(v)?),
                ["r_squared", v] => r_squared = Some(hex(v)?),
                ["constant", v] => constant = Some(hex(v)?),
                ["feature", f, c, t] => {
                    feature_names.push(f.to_owned());
                    coefficients.push(hex(c)?);
                    t_values.push(hex(t)?);
                }
                _ => return Err(bad()),
            }
        }
        let missing = |what: &str| Error::parse(context, 0, format!("missing `{what}`"));
        Ok(LinearModel {
            name: name.ok_or_else(|| missing("model"))?,
            feature_names,
            constant: constant.ok_or_else(|| missing("constant"))?,
            coefficients,
            r_squared: r_squared.ok_or_else(|| missing("r_squared"))?,
            t_values,
            n_samples: n_samples.ok_or_else(|| missing("n_samples"))?,
            ridge: ridge.ok_or_else(|| missing("ridge"))?,
            seed: seed.ok_or_else(|| missing("seed"))?,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        LinearModel::parse(&text, &path.display().to_string())
    }

    /// One-line diagnostics: R² and the t-value of each feature.
    pub fn diagnostics(&self) -> String {
        let ts: Vec<String> = self
            .feature_names
            .iter()
            .zip(&self.t_values)
            .map(|(n, t)| format!("{n}={t:.2}"))
            .collect();
        format!(
            "{}: R^2={:.4} n={} ridge={:e} t: {}",
            self.name,
            self.r_squared,
            self.n_samples,
            self.ridge,
            ts.join(" ")
        )
    }
}

/// The three trained score equations.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterModels {
    pub qpt: LinearModel,
    pub word: LinearModel,
    pub path: LinearModel,
}

pub const QPT_MODEL_FILE: &str = "qpt.model";
pub const WORD_MODEL_FILE: &str = "word.model";
pub const PATH_MODEL_FILE: &str = "path.model";

impl FilterModels {
    pub fn validate(&self) -> Result<()> {
        for (m, arity) in [(&self.qpt, 6), (&self.word, 5), (&self.path, 6)] {
            if m.arity() != arity || m.t_values.len() != arity || m.feature_names.len() != arity {
                return Err(Error::Arity {
                    expected: arity,
                    got: m.arity(),
                });
            }
        }
        Ok(())
    }

    pub fn save(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        self.qpt.save(dir.join(QPT_MODEL_FILE))?;
        self.word.save(dir.join(WORD_MODEL_FILE))?;
        self.path.save(dir.join(PATH_MODEL_FILE))
    }

    pub fn load(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        let models = FilterModels {
            qpt: LinearModel::load(dir.join(QPT_MODEL_FILE))?,
            word: LinearModel::load(dir.join(WORD_MODEL_FILE))?,
            path: LinearModel::load(dir.join(PATH_MODEL_FILE))?,
        };
        models.validate()?;
        Ok(models)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainingConfig {
    /// Corpus windows per model.
    pub positives: usize,
    /// Control sequences per model.
    pub negatives: usize,
    pub window: usize,
    pub seed: u64,
    pub ridge: f64,
    pub path: PathConfig,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        TrainingConfig {
            positives: 3000,
            negatives: 3000,
            window: 85,
            seed: 0,
            ridge: DEFAULT_RIDGE,
            path: PathConfig::default(),
        }
    }
}

pub fn qpt_vector(ngram: &NgramModel, seq: &[u8]) -> Vec<f64> {
    ngram.qpt_features(seq).to_vector().to_vec()
}

pub fn word_vector(lex: &Lexicon, seq: &[u8]) -> Vec<f64> {
    lex.word_features(seq).to_vector().to_vec()
}

pub fn path_vector(lex: &Lexicon, seq: &[u8], cfg: &PathConfig) -> Vec<f64> {
    path_features(seq, lex, cfg).to_vector().to_vec()
}

/// Samples labelled sequences and fits the QPT, Word and Path equations.
///
/// Every model gets its own windows and controls drawn from one generator
/// seeded with `cfg.seed`, in the order QPT, Word, Path.
pub fn train_filter_models(
    corpus: &Corpus,
    ngram: &NgramModel,
    lexicon: &Lexicon,
    dist: &UnigramDist,
    cfg: &TrainingConfig,
) -> Result<FilterModels> {
    cfg.path.validate()?;
    let mut master = Prng::seeded(cfg.seed);
    let samples = |master: &mut Prng| -> Result<(Vec<Seq>, Vec<Seq>)> {
        let mut rng = master.fork();
        let pos = sample_windows(corpus, cfg.positives, cfg.window, &mut rng)?;
        let neg = (0..cfg.negatives).map(|_| gen_control(dist, cfg.window, &mut rng)).collect();
        Ok((pos, neg))
    };
    let fit = |(pos, neg): (Vec<Seq>, Vec<Seq>), extract: &dyn Fn(&Seq) -> Vec<f64>, name: &str, names: &[&str]| {
        let rows = pos
            .iter()
            .map(|s| (extract(s), 1))
            .chain(neg.iter().map(|s| (extract(s), 0)))
            .collect();
        let mut model = fit_ols(&TrainingSet::new(rows)?, cfg.ridge)?.with_names(name, names)?;
        model.seed = Some(cfg.seed);
        Ok::<_, Error>(model)
    };
    let path_cfg = PathConfig {
        seed: cfg.seed,
        ..cfg.path
    };

    let qpt = fit(samples(&mut master)?, &|s| qpt_vector(ngram, s), "qpt", &QptFeatures::NAMES)?;
    let word = fit(samples(&mut master)?, &|s| word_vector(lexicon, s), "word", &WordFeatures::NAMES)?;
    let path = fit(
        samples(&mut master)?,
        &|s| path_vector(lexicon, s, &path_cfg),
        "path",
        &PathFeatures::NAMES,
    )?;
    Ok(FilterModels { qpt, word, path })
}
