use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Poisson, StandardNormal};

use super::{CohortDataset, CohortError, Gender, ItemSchema, Living, ParticipantRecord};

/// Parameters for a synthetic cohort.
///
/// Item scores are drawn from discretised, truncated normals: the latent value
/// `mean + sd * (loading * severity + sqrt(1 - loading^2) * noise)` is rounded and clamped
/// to the item's range, where `severity` is shared by all items of a participant. Fall
/// labels are Bernoulli with `logit = intercept + sum(coef_j * score_j)`; both horizons use
/// one uniform draw per participant, so with `intercept_12m >= intercept` every 6-month
/// faller is also a 12-month faller.
///
/// Text form (one `key = value` per line, `#` starts a comment):
///
/// ```text
/// n_participants = 51
/// intercept = -3.0
/// intercept_12m = -2.5      # defaults to intercept
/// score_mean = 0.4          # default item mean, as a fraction of the item's range
/// score_sd = 0.3            # default item sd, as a fraction of the item's range
/// latent_loading = 0.0      # in [0, 1)
/// male_fraction = 0.75
/// alone_fraction = 0.1
/// coef.item_10 = 1.2        # causal item and log-odds per score point
/// mean.item_22 = 2.0        # per-item mean override, in score units
/// sd.item_22 = 0.8          # per-item sd override, in score units
/// loading.item_22 = 0.9     # per-item latent_loading override
/// ```
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub n_participants: usize,
    pub intercept: f64,
    pub intercept_12m: Option<f64>,
    pub coefficients: BTreeMap<u8, f64>,
    pub score_mean_frac: f64,
    pub score_sd_frac: f64,
    pub item_mean: BTreeMap<u8, f64>,
    pub item_sd: BTreeMap<u8, f64>,
    pub latent_loading: f64,
    pub item_loading: BTreeMap<u8, f64>,
    pub male_fraction: f64,
    pub alone_fraction: f64,
}

impl Default for Scenario {
    fn default() -> Self {
        Scenario {
            n_participants: 51,
            intercept: 0.0,
            intercept_12m: None,
            coefficients: BTreeMap::new(),
            score_mean_frac: 0.4,
            score_sd_frac: 0.3,
            item_mean: BTreeMap::new(),
            item_sd: BTreeMap::new(),
            latent_loading: 0.0,
            item_loading: BTreeMap::new(),
            male_fraction: 0.75,
            alone_fraction: 0.1,
        }
    }
}

fn item_key(key: &str) -> Option<u8> {
    key.strip_prefix("item_").unwrap_or(key).parse().ok()
}

impl Scenario {
    pub fn parse(text: &str) -> Result<Scenario, CohortError> {
        let mut sc = Scenario::default();
        let mut seen = std::collections::HashSet::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let bad = |msg: &str| CohortError::InvalidConfig(format!("line {}: {msg}", lineno + 1));
            let (key, value) = line.split_once('=').ok_or_else(|| bad("expected key = value"))?;
            let (key, value) = (key.trim(), value.trim());
            if !seen.insert(key.to_string()) {
                return Err(bad(&format!("duplicate key {key:?}")));
            }
            let num = || value.parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| bad("expected a number"));
            match key {
                "n_participants" => {
                    sc.n_participants = value.parse().map_err(|_| bad("expected a non-negative integer"))?
                }
                "intercept" => sc.intercept = num()?,
                "intercept_12m" => sc.intercept_12m = Some(num()?),
                "score_mean" => sc.score_mean_frac = num()?,
                "score_sd" => sc.score_sd_frac = num()?,
                "latent_loading" => sc.latent_loading = num()?,
                "male_fraction" => sc.male_fraction = num()?,
                "alone_fraction" => sc.alone_fraction = num()?,
                _ => {
                    let (kind, item) = key.split_once('.').ok_or_else(|| bad(&format!("unknown key {key:?}")))?;
                    let id = item_key(item).ok_or_else(|| bad(&format!("bad item reference {item:?}")))?;
                    let map = match kind {
                        "coef" => &mut sc.coefficients,
                        "mean" => &mut sc.item_mean,
                        "sd" => &mut sc.item_sd,
                        "loading" => &mut sc.item_loading,
                        _ => return Err(bad(&format!("unknown key {key:?}"))),
                    };
                    map.insert(id, num()?);
                }
            }
        }
        Ok(sc)
    }

    fn validate(&self, schema: &ItemSchema) -> Result<(), CohortError> {
        let bad = |msg: String| Err(CohortError::InvalidConfig(msg));
        if self.n_participants == 0 {
            return bad("n_participants must be at least 1".into());
        }
        for (what, map) in [
            ("coef", &self.coefficients),
            ("mean", &self.item_mean),
            ("sd", &self.item_sd),
            ("loading", &self.item_loading),
        ] {
            if let Some(id) = map.keys().find(|id| schema.get(**id).is_none()) {
                return bad(format!("{what}.item_{id} references an unknown item"));
            }
        }
        if self.item_sd.values().any(|&s| s < 0.0) || self.score_sd_frac < 0.0 {
            return bad("standard deviations must be non-negative".into());
        }
        if !(0.0..1.0).contains(&self.latent_loading) {
            return bad("latent_loading must lie in [0, 1)".into());
        }
        if self.item_loading.values().any(|l| !(0.0..1.0).contains(l)) {
            return bad("item loadings must lie in [0, 1)".into());
        }
        for (name, p) in [("male_fraction", self.male_fraction), ("alone_fraction", self.alone_fraction)] {
            if !(0.0..=1.0).contains(&p) {
                return bad(format!("{name} must lie in [0, 1]"));
            }
        }
        Ok(())
    }
}

fn round1(x: f64) -> f64 {
    (x * 10.0).round() / 10.0
}

fn logistic(eta: f64) -> f64 {
    1.0 / (1.0 + (-eta).exp())
}

/// Draws a cohort from `config`. Identical `(config, schema, seed)` give identical data.
pub fn generate_synthetic(config: &Scenario, schema: &ItemSchema, seed: u64) -> Result<CohortDataset, CohortError> {
    config.validate(schema)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let age = Normal::<f64>::new(66.0, 8.0).expect("valid normal");
    let duration = Normal::<f64>::new(5.0, 3.0).expect("valid normal");
    let falls = Poisson::<f64>::new(0.9).expect("valid poisson");
    const HY: [f64; 5] = [1.0, 1.5, 2.0, 2.5, 3.0];
    let width = config.n_participants.to_string().len().max(3);

    let mut records = Vec::with_capacity(config.n_participants);
    for i in 0..config.n_participants {
        let severity: f64 = rng.sample(StandardNormal);
        let gender = if rng.random::<f64>() < config.male_fraction { Gender::Male } else { Gender::Female };
        let age_years = round1(age.sample(&mut rng).clamp(35.0, 95.0));
        let living = if rng.random::<f64>() < config.alone_fraction { Living::Alone } else { Living::WithFamily };
        let duration_years = round1(duration.sample(&mut rng).abs());
        let previous_falls = falls.sample(&mut rng) as u32;
        let hy_score = HY[rng.random_range(0..HY.len())];

        let mut item_scores = BTreeMap::new();
        for item in schema.items() {
            let range = f64::from(item.max_score - item.min_score);
            let mean = config
                .item_mean
                .get(&item.id)
                .copied()
                .unwrap_or(f64::from(item.min_score) + config.score_mean_frac * range);
            let sd = config.item_sd.get(&item.id).copied().unwrap_or(config.score_sd_frac * range);
            let loading = config.item_loading.get(&item.id).copied().unwrap_or(config.latent_loading);
            let unique = (1.0 - loading * loading).sqrt();
            let noise: f64 = rng.sample(StandardNormal);
            let latent = mean + sd * (loading * severity + unique * noise);
            let score = latent.round().clamp(f64::from(item.min_score), f64::from(item.max_score));
            item_scores.insert(item.id, score as u8);
        }

        let linear: f64 = config.coefficients.iter().map(|(id, c)| c * f64::from(item_scores[id])).sum();
        let u: f64 = rng.random();
        let fell_6m = u < logistic(config.intercept + linear);
        let fell_12m = u < logistic(config.intercept_12m.unwrap_or(config.intercept) + linear);

        records.push(ParticipantRecord {
            participant_id: format!("P{:0width$}", i + 1),
            gender,
            age_years,
            living,
            duration_years,
            previous_falls,
            hy_score,
            item_scores,
            fell_6m,
            fell_12m,
        });
    }
    CohortDataset::new(schema.clone(), records)
}
