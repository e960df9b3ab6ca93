//! Synonym lexicon and stopword list.
//!
//! Lexicon file format: UTF-8, one synonym group per line, words separated by
//! whitespace. The first word is the headword, the rest its synonyms. Lines
//! starting with `#` are comments. Every member of a group is treated as a
//! synonym of every other member; groups sharing a word are merged per word.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::path::Path;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SynonymLexicon {
    groups: HashMap<String, Vec<String>>,
}

impl SynonymLexicon {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds one group; the first word is the headword.
    pub fn add_group<S: AsRef<str>>(&mut self, words: &[S]) {
        let words: Vec<String> = words.iter().map(|w| w.as_ref().to_lowercase()).collect();
        for w in &words {
            let mut merged: BTreeSet<String> = self
                .groups
                .remove(w)
                .unwrap_or_default()
                .into_iter()
                .collect();
            merged.extend(words.iter().filter(|o| *o != w).cloned());
            if !merged.is_empty() {
                self.groups.insert(w.clone(), merged.into_iter().collect());
            }
        }
    }

    pub fn parse(source: &str) -> Self {
        let mut lex = Self::new();
        for line in source.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let words: Vec<&str> = line.split_whitespace().collect();
            lex.add_group(&words);
        }
        lex
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(Self::parse(&text))
    }

    /// Synonyms of `word`, lowercase and sorted, never containing `word` itself.
    pub fn synonyms(&self, word: &str) -> &[String] {
        self.groups
            .get(&word.to_lowercase())
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }

    pub fn has_synonyms(&self, word: &str) -> bool {
        !self.synonyms(word).is_empty()
    }

    pub fn len(&self) -> usize {
        self.groups.len()
    }

    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }

    /// Small general-purpose English lexicon.
    pub fn builtin() -> Self {
        Self::parse(BUILTIN_LEXICON)
    }
}

const BUILTIN_LEXICON: &str = "\
# headword synonyms...
happy glad cheerful joyful
sad unhappy gloomy
wonderful grand marvelous splendid
good fine nice
bad poor awful
big large huge
small little tiny
fast quick rapid
slow sluggish
day daytime
start begin commence
starting beginning
work job labor
love adore
hate despise loathe
excited thrilled eager
angry mad furious
movie film picture
great excellent terrific
funny amusing comical
boring dull tedious
";

const BUILTIN_STOPWORDS: &[&str] = &[
    "i", "me", "my", "myself", "we", "our", "ours", "ourselves", "you", "your", "yours",
    "yourself", "yourselves", "he", "him", "his", "himself", "she", "her", "hers", "herself",
    "it", "its", "itself", "they", "them", "their", "theirs", "themselves", "what", "which",
    "who", "whom", "this", "that", "these", "those", "am", "is", "are", "was", "were", "be",
    "been", "being", "have", "has", "had", "having", "do", "does", "did", "doing", "a", "an",
    "the", "and", "but", "if", "or", "because", "as", "until", "while", "of", "at", "by",
    "for", "with", "about", "against", "between", "into", "through", "during", "before",
    "after", "above", "below", "to", "from", "up", "down", "in", "out", "on", "off", "over",
    "under", "again", "further", "then", "once", "here", "there", "when", "where", "why",
    "how", "all", "any", "both", "each", "few", "more", "most", "other", "some", "such", "no",
    "nor", "not", "only", "own", "same", "so", "than", "too", "very", "s", "t", "can", "will",
    "just", "don", "should", "now", "d", "ll", "m", "o", "re", "ve", "y", "im", "ive", "id",
    "youre", "youve", "hes", "shes", "its", "were", "theyre", "dont", "doesnt", "didnt",
    "isnt", "arent", "wasnt", "cant", "wont", "rt",
];

/// Words never eligible for synonym replacement.
#[derive(Debug, Clone, PartialEq)]
pub struct Stopwords {
    words: HashSet<String>,
}

impl Stopwords {
    pub fn builtin() -> Self {
        Self {
            words: BUILTIN_STOPWORDS.iter().map(|w| (*w).to_owned()).collect(),
        }
    }

    pub fn empty() -> Self {
        Self {
            words: HashSet::new(),
        }
    }

    /// One word per line; blank lines and `#` comments are skipped.
    pub fn parse(source: &str) -> Self {
        let words = source
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(str::to_lowercase)
            .collect();
        Self { words }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(Self::parse(&text))
    }

    pub fn contains(&self, word: &str) -> bool {
        self.words.contains(&word.to_lowercase())
    }
}

impl Default for Stopwords {
    fn default() -> Self {
        Self::builtin()
    }
}
