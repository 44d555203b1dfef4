//! TF-IDF keyword suggestions for bootstrapping cluster definitions.
//!
//! `score(t) = sum over documents d of tf(t, d) * ln(N / df(t))`, raw counts
//! for tf, no smoothing. Terms found in more than `df_ceiling` of the
//! documents are dropped: they behave like stop-words.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_DF_CEILING: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KeywordScore {
    pub term: String,
    pub score: f64,
    /// Fraction of documents containing the term.
    pub document_frequency: f64,
}

pub fn suggest_keywords<S: AsRef<str> + Sync>(
    docs: &[Vec<S>],
    top_k: usize,
    df_ceiling: f64,
) -> Result<Vec<KeywordScore>> {
    if top_k == 0 {
        return Err(Error::Contract("top_k must be at least 1".into()));
    }
    if !(df_ceiling > 0.0 && df_ceiling <= 1.0) {
        return Err(Error::Contract(format!(
            "df_ceiling {df_ceiling} is outside (0, 1]"
        )));
    }

    // term -> (total tf, document count)
    let counts: HashMap<&str, (u64, u64)> = docs
        .par_iter()
        .fold(HashMap::new, |mut acc: HashMap<&str, (u64, u64)>, doc| {
            let mut local: HashMap<&str, u64> = HashMap::new();
            for t in doc {
                *local.entry(t.as_ref()).or_default() += 1;
            }
            for (t, tf) in local {
                let e = acc.entry(t).or_default();
                e.0 += tf;
                e.1 += 1;
            }
            acc
        })
        .reduce(HashMap::new, |mut a, b| {
            for (t, (tf, df)) in b {
                let e = a.entry(t).or_default();
                e.0 += tf;
                e.1 += df;
            }
            a
        });

    let n = docs.len() as f64;
    let mut scored: Vec<KeywordScore> = counts
        .into_iter()
        .filter_map(|(term, (tf, df))| {
            let document_frequency = df as f64 / n;
            (document_frequency <= df_ceiling).then(|| KeywordScore {
                term: term.to_string(),
                score: tf as f64 * (n / df as f64).ln(),
                document_frequency,
            })
        })
        .collect();
    scored.sort_by(|a, b| {
        b.score
            .total_cmp(&a.score)
            .then_with(|| a.term.cmp(&b.term))
    });
    scored.truncate(top_k);
    Ok(scored)
}
