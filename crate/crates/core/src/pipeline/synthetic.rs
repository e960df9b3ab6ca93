//! Synthetic keyword classification task with a known labeller.
//!
//! Every class owns a few concepts; every concept is spelled by several
//! interchangeable keyword variants listed as synonyms in the lexicon. A text
//! is filler words plus one keyword. Training texts mostly use the first
//! variant while test texts use all variants evenly, so a model only
//! generalizes if augmentation shows it the other spellings.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::dataset::Dataset;
use super::metrics::LabelingOracle;
use crate::augment::{Stopwords, SynonymLexicon};
use crate::error::{Error, Result};
use crate::text::{Sample, TokenizedText};

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticConfig {
    pub num_classes: usize,
    pub concepts_per_class: usize,
    pub variants: usize,
    pub fillers: usize,
    /// Share of filler words that have a (class-neutral) synonym.
    pub filler_synonym_share: f64,
    /// Share of filler words that also list a random class keyword as a
    /// synonym, the way polysemous lexicon entries bridge unrelated senses.
    pub confuser_share: f64,
    pub min_fillers: usize,
    pub max_fillers: usize,
    /// Probability that a training text uses the first keyword variant.
    pub train_primary_variant: f64,
    /// Probability that a training filler comes from the class's own slice of
    /// the filler vocabulary rather than the whole of it.
    pub train_filler_bias: f64,
    /// Seed for the vocabulary itself.
    pub vocab_seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            num_classes: 3,
            concepts_per_class: 4,
            variants: 4,
            fillers: 60,
            filler_synonym_share: 0.5,
            confuser_share: 0.3,
            min_fillers: 4,
            max_fillers: 8,
            train_primary_variant: 0.75,
            train_filler_bias: 0.0,
            vocab_seed: 7,
        }
    }
}

impl SyntheticConfig {
    pub fn validate(&self) -> Result<()> {
        if self.num_classes < 2 || self.concepts_per_class == 0 || self.variants == 0 || self.fillers == 0 {
            return Err(Error::Config("synthetic task needs ≥2 classes and non-empty vocabularies".into()));
        }
        if self.min_fillers > self.max_fillers {
            return Err(Error::Config("min_fillers exceeds max_fillers".into()));
        }
        for (name, p) in [
            ("filler_synonym_share", self.filler_synonym_share),
            ("confuser_share", self.confuser_share),
            ("train_primary_variant", self.train_primary_variant),
            ("train_filler_bias", self.train_filler_bias),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::Config(format!("{name} must lie in [0, 1], got {p}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticTask {
    config: SyntheticConfig,
    /// `[class][concept][variant]`
    keywords: Vec<Vec<Vec<String>>>,
    /// Filler words, each with its synonyms (possibly none).
    fillers: Vec<Vec<String>>,
    /// (filler, keyword) pairs linked in the lexicon.
    confusers: Vec<(String, String)>,
    keyword_class: BTreeMap<String, usize>,
}

const ONSETS: &[&str] = &["b", "d", "f", "g", "k", "l", "m", "n", "p", "r", "s", "t", "v", "z", "br", "tr", "kl", "sn"];
const NUCLEI: &[&str] = &["a", "e", "i", "o", "u", "ai", "ou"];

fn pseudo_word(rng: &mut ChaCha8Rng) -> String {
    let syllables = rng.random_range(2..=3);
    let mut w = String::new();
    for _ in 0..syllables {
        w.push_str(ONSETS.choose(rng).expect("non-empty"));
        w.push_str(NUCLEI.choose(rng).expect("non-empty"));
    }
    w
}

impl SyntheticTask {
    pub fn new(config: SyntheticConfig) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.vocab_seed);
        let stopwords = Stopwords::builtin();
        let mut used = BTreeSet::new();
        let mut fresh = |rng: &mut ChaCha8Rng| loop {
            let w = pseudo_word(rng);
            if !stopwords.contains(&w) && used.insert(w.clone()) {
                return w;
            }
        };
        let keywords: Vec<Vec<Vec<String>>> = (0..config.num_classes)
            .map(|_| {
                (0..config.concepts_per_class)
                    .map(|_| (0..config.variants).map(|_| fresh(&mut rng)).collect())
                    .collect()
            })
            .collect();
        let fillers: Vec<Vec<String>> = (0..config.fillers)
            .map(|_| {
                let mut group = vec![fresh(&mut rng)];
                if rng.random_bool(config.filler_synonym_share) {
                    group.push(fresh(&mut rng));
                }
                group
            })
            .collect();
        let mut confusers = Vec::new();
        for group in &fillers {
            if rng.random_bool(config.confuser_share) {
                let class = rng.random_range(0..config.num_classes);
                let concept = rng.random_range(0..config.concepts_per_class);
                let variant = rng.random_range(0..config.variants);
                confusers.push((group[0].clone(), keywords[class][concept][variant].clone()));
            }
        }
        let mut keyword_class = BTreeMap::new();
        for (c, concepts) in keywords.iter().enumerate() {
            for w in concepts.iter().flatten() {
                keyword_class.insert(w.clone(), c);
            }
        }
        Ok(Self {
            config,
            keywords,
            fillers,
            confusers,
            keyword_class,
        })
    }

    pub fn config(&self) -> &SyntheticConfig {
        &self.config
    }

    pub fn labels(&self) -> Vec<String> {
        (0..self.config.num_classes).map(|c| format!("class{c}")).collect()
    }

    fn synonym_groups(&self) -> Vec<Vec<String>> {
        self.keywords
            .iter()
            .flatten()
            .cloned()
            .chain(self.fillers.iter().filter(|g| g.len() > 1).cloned())
            .chain(self.confusers.iter().map(|(f, k)| vec![f.clone(), k.clone()]))
            .collect()
    }

    /// Keyword variants, filler synonyms and confuser links as synonym groups.
    pub fn lexicon(&self) -> SynonymLexicon {
        let mut lex = SynonymLexicon::new();
        for group in self.synonym_groups() {
            lex.add_group(&group);
        }
        lex
    }

    /// Lexicon in the one-group-per-line file format.
    pub fn lexicon_text(&self) -> String {
        self.synonym_groups().iter().map(|g| g.join(" ") + "\n").collect()
    }

    fn filler(&self, class: usize, biased: bool, rng: &mut ChaCha8Rng) -> String {
        let n = self.fillers.len();
        let slice = n / self.config.num_classes;
        let i = if biased && slice > 0 && rng.random_bool(self.config.train_filler_bias) {
            class * slice + rng.random_range(0..slice)
        } else {
            rng.random_range(0..n)
        };
        self.fillers[i][0].clone()
    }

    fn sample(&self, class: usize, primary: Option<f64>, rng: &mut ChaCha8Rng) -> Sample {
        let concept = rng.random_range(0..self.config.concepts_per_class);
        let variant = match primary {
            Some(p) if self.config.variants == 1 || rng.random_bool(p) => 0,
            Some(_) => rng.random_range(1..self.config.variants),
            None => rng.random_range(0..self.config.variants),
        };
        let n = rng.random_range(self.config.min_fillers..=self.config.max_fillers);
        let mut tokens: Vec<String> = (0..n).map(|_| self.filler(class, primary.is_some(), rng)).collect();
        let at = rng.random_range(0..=tokens.len());
        tokens.insert(at, self.keywords[class][concept][variant].clone());
        Sample::new(TokenizedText::from_tokens(tokens).expect("pseudo-words are valid tokens"), class)
    }

    fn split(&self, n: usize, seed: u64, primary: Option<f64>) -> Dataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let samples = (0..n)
            .map(|i| self.sample(i % self.config.num_classes, primary, &mut rng))
            .collect();
        Dataset::new(samples, self.labels()).expect("generated data is valid")
    }

    /// Class-balanced training split skewed to the primary keyword variant.
    pub fn train_set(&self, n: usize, seed: u64) -> Dataset {
        self.split(n, seed, Some(self.config.train_primary_variant))
    }

    /// Class-balanced test split using every variant evenly.
    pub fn test_set(&self, n: usize, seed: u64) -> Dataset {
        self.split(n, seed, None)
    }
}

impl LabelingOracle for SyntheticTask {
    /// The class with the most keyword occurrences; `None` when no keyword is
    /// present or classes tie.
    fn label(&self, text: &TokenizedText) -> Option<usize> {
        let mut counts = vec![0usize; self.config.num_classes];
        for t in text.tokens() {
            if let Some(&c) = self.keyword_class.get(t) {
                counts[c] += 1;
            }
        }
        let best = *counts.iter().max()?;
        if best == 0 || counts.iter().filter(|&&c| c == best).count() > 1 {
            return None;
        }
        counts.iter().position(|&c| c == best)
    }
}
