//! Shot sampling, experimental count dictionaries, empirical probabilities,
//! low-count truncation and repeat-run statistics.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::entropy::{self, ProbabilityTable};
use crate::error::{Error, Result};
use crate::hamiltonian::BasisConvention;
use crate::lattice::Partition;

/// Measured bitstring counts from one experimental run. Keys are g/r strings
/// of uniform length; the total equals `shots`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Counts {
    counts: BTreeMap<String, u64>,
    shots: u64,
    n_atoms: usize,
}

/// Canonical JSON form: {"counts": {...}, "shots": n}.
#[derive(Serialize, Deserialize)]
struct CountsJson {
    counts: BTreeMap<String, u64>,
    shots: u64,
}

impl Counts {
    /// Build from a key -> count map. Keys may use the g/r or 0/1 alphabet
    /// (normalized to g/r) and must share one length.
    pub fn new(raw: BTreeMap<String, u64>) -> Result<Self> {
        if raw.is_empty() {
            return Err(Error::DegenerateData("no bitstrings in counts".into()));
        }
        let n_atoms = raw.keys().next().unwrap().len();
        let mut counts = BTreeMap::new();
        let mut shots = 0u64;
        for (key, count) in raw {
            if key.len() != n_atoms {
                return Err(Error::parse_at(
                    format!("bitstring length {} does not match {}", key.len(), n_atoms),
                    format!("key '{key}'"),
                ));
            }
            let normalized: String = key
                .chars()
                .map(|c| match c {
                    'g' | '0' => Ok('g'),
                    'r' | '1' => Ok('r'),
                    other => Err(Error::parse_at(
                        format!("invalid symbol '{other}'"),
                        format!("key '{key}'"),
                    )),
                })
                .collect::<Result<String>>()?;
            shots += count;
            *counts.entry(normalized).or_insert(0) += count;
        }
        Ok(Self {
            counts,
            shots,
            n_atoms,
        })
    }

    pub fn counts(&self) -> &BTreeMap<String, u64> {
        &self.counts
    }

    pub fn shots(&self) -> u64 {
        self.shots
    }

    pub fn n_atoms(&self) -> usize {
        self.n_atoms
    }

    pub fn get(&self, key: &str) -> u64 {
        self.counts.get(key).copied().unwrap_or(0)
    }

    /// Canonical JSON: {"counts": {...}, "shots": n}.
    pub fn to_json(&self) -> String {
        serde_json::to_string(&CountsJson {
            counts: self.counts.clone(),
            shots: self.shots,
        })
        .expect("counts serialize")
    }
}

/// Multinomial draw of `shots` measurements from a probability table.
/// Deterministic given `seed`.
pub fn sample(p: &ProbabilityTable, shots: u64, seed: u64) -> Result<Counts> {
    if shots == 0 {
        return Err(Error::invalid("shots must be >= 1"));
    }
    let basis = BasisConvention::new(p.n_atoms());
    let entries = p.entries();
    // cumulative distribution over the sparse entries
    let mut cdf = Vec::with_capacity(entries.len());
    let mut acc = 0.0f64;
    for &(_, prob) in entries {
        acc += prob;
        cdf.push(acc);
    }
    let total = acc;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut counts: BTreeMap<String, u64> = BTreeMap::new();
    for _ in 0..shots {
        let u: f64 = rng.gen::<f64>() * total;
        let i = cdf.partition_point(|&c| c < u).min(entries.len() - 1);
        let key = basis.index_to_string(entries[i].0);
        *counts.entry(key).or_insert(0) += 1;
    }
    Counts::new(counts)
}

/// Empirical probabilities count/shots; unobserved strings carry zero.
pub fn empirical(counts: &Counts) -> Result<ProbabilityTable> {
    if counts.shots == 0 {
        return Err(Error::invalid("cannot estimate probabilities from zero shots"));
    }
    let basis = BasisConvention::new(counts.n_atoms);
    let shots = counts.shots as f64;
    let entries = counts
        .counts
        .iter()
        .map(|(key, &c)| Ok((basis.string_to_index(key)?, c as f64 / shots)))
        .collect::<Result<Vec<_>>>()?;
    ProbabilityTable::new(counts.n_atoms, entries)
}

/// Drop entries observed fewer than `min_count` times; `shots` shrinks to the
/// remaining total.
pub fn truncate(counts: &Counts, min_count: u64) -> Result<Counts> {
    let kept: BTreeMap<String, u64> = counts
        .counts
        .iter()
        .filter(|(_, &c)| c >= min_count)
        .map(|(k, &c)| (k.clone(), c))
        .collect();
    if kept.is_empty() {
        return Err(Error::DegenerateData(format!(
            "truncation at min_count {min_count} removed every bitstring"
        )));
    }
    Counts::new(kept)
}

/// Truncate an exact distribution as if measured with `shots` shots: entries
/// with p * shots < min_count are dropped and the rest renormalized. The
/// product is compared without rounding.
pub fn truncate_exact(
    p: &ProbabilityTable,
    shots: u64,
    min_count: u64,
) -> Result<ProbabilityTable> {
    let threshold = min_count as f64;
    let shots = shots as f64;
    let kept: Vec<(usize, f64)> = p
        .entries()
        .iter()
        .copied()
        .filter(|&(_, prob)| prob * shots >= threshold)
        .collect();
    if kept.is_empty() {
        return Err(Error::DegenerateData(format!(
            "exact truncation at min_count {min_count} removed every state"
        )));
    }
    let total: f64 = kept.iter().map(|e| e.1).sum();
    ProbabilityTable::new(
        p.n_atoms(),
        kept.into_iter().map(|(i, q)| (i, q / total)).collect(),
    )
}

/// Parse a serialized count dictionary: canonical JSON
/// ({"counts": {...}, "shots": n}), a bare JSON object of bitstring -> count,
/// or a python dict literal with single quotes.
pub fn parse_counts(text: &str) -> Result<Counts> {
    // device logs are python dicts; their keys hold no quotes, so a plain
    // quote swap yields valid JSON
    let normalized = if text.contains('\'') {
        text.replace('\'', "\"")
    } else {
        text.to_owned()
    };
    let value: serde_json::Value = serde_json::from_str(&normalized).map_err(|e| {
        Error::parse_at(e.to_string(), format!("line {} column {}", e.line(), e.column()))
    })?;
    let obj = value
        .as_object()
        .ok_or_else(|| Error::parse("expected a JSON object of bitstring counts"))?;

    let map_value = if obj.contains_key("counts") {
        obj.get("counts")
            .and_then(|v| v.as_object())
            .ok_or_else(|| Error::parse("'counts' must be an object"))?
    } else {
        obj
    };
    let mut raw = BTreeMap::new();
    for (key, v) in map_value {
        let count = v.as_u64().ok_or_else(|| {
            Error::parse_at(
                format!("count must be a non-negative integer, got {v}"),
                format!("key '{key}'"),
            )
        })?;
        raw.insert(key.clone(), count);
    }
    let counts = Counts::new(raw)?;
    if let Some(shots) = obj.get("shots") {
        let declared = shots
            .as_u64()
            .ok_or_else(|| Error::parse("'shots' must be a non-negative integer"))?;
        if declared != counts.shots {
            return Err(Error::parse(format!(
                "declared shots {declared} but counts total {}",
                counts.shots
            )));
        }
    }
    Ok(counts)
}

/// Counts from repeated identical experiments.
#[derive(Debug, Clone)]
pub struct RunEnsemble {
    runs: Vec<Counts>,
}

impl RunEnsemble {
    pub fn new(runs: Vec<Counts>) -> Result<Self> {
        if let Some(first) = runs.first() {
            for r in &runs {
                if r.n_atoms != first.n_atoms {
                    return Err(Error::invalid(format!(
                        "runs mix atom counts {} and {}",
                        first.n_atoms, r.n_atoms
                    )));
                }
            }
        }
        Ok(Self { runs })
    }

    pub fn runs(&self) -> &[Counts] {
        &self.runs
    }
}

/// Sample mean and standard error of the mean.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeanSe {
    pub mean: f64,
    pub se: f64,
}

fn mean_se(values: &[f64]) -> MeanSe {
    let k = values.len() as f64;
    let mean = values.iter().sum::<f64>() / k;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (k - 1.0);
    MeanSe {
        mean,
        se: (var / k).sqrt(),
    }
}

/// Per-run entropies with repeat-run statistics.
#[derive(Debug, Clone, Serialize)]
pub struct EnsembleStats {
    pub n_runs: usize,
    pub s_ab_x: MeanSe,
    pub s_a_x: MeanSe,
    /// 2 s_a_x - s_ab_x per run.
    pub estimator: MeanSe,
    /// Per-run estimator values, in run order.
    pub per_run_estimator: Vec<f64>,
}

/// Plug-in entropies per run, then mean and standard error across runs.
pub fn ensemble_stats(ensemble: &RunEnsemble, partition: &Partition) -> Result<EnsembleStats> {
    if ensemble.runs.len() < 2 {
        return Err(Error::invalid(format!(
            "need at least 2 runs for statistics, got {}",
            ensemble.runs.len()
        )));
    }
    let mut sab = Vec::new();
    let mut sa = Vec::new();
    let mut est = Vec::new();
    for run in &ensemble.runs {
        let p = empirical(run)?;
        let pa = entropy::reduce(&p, partition)?;
        let s1 = entropy::shannon(&p);
        let s2 = entropy::shannon(&pa);
        sab.push(s1);
        sa.push(s2);
        est.push(2.0 * s2 - s1);
    }
    Ok(EnsembleStats {
        n_runs: ensemble.runs.len(),
        s_ab_x: mean_se(&sab),
        s_a_x: mean_se(&sa),
        estimator: mean_se(&est),
        per_run_estimator: est,
    })
}
