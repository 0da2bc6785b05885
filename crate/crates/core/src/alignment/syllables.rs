//! Deterministic syllable and speech-duration heuristics.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use unicode_normalization::UnicodeNormalization;

use super::AlignmentError;
use crate::model::primary_language;

pub const DEFAULT_SYLLABLES_PER_SECOND: f64 = 4.0;

/// Speaking rate per language, in syllables per second.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RateTable", into = "RateTable")]
pub struct SpeechRateModel {
    default_rate: f64,
    rates: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct RateTable {
    #[serde(default = "default_rate")]
    default: f64,
    #[serde(default)]
    rates: BTreeMap<String, f64>,
}

fn default_rate() -> f64 {
    DEFAULT_SYLLABLES_PER_SECOND
}

impl TryFrom<RateTable> for SpeechRateModel {
    type Error = AlignmentError;

    fn try_from(t: RateTable) -> Result<Self, Self::Error> {
        let mut model = SpeechRateModel::with_default(t.default)?;
        for (lang, rate) in t.rates {
            model.set_rate(&lang, rate)?;
        }
        Ok(model)
    }
}

impl From<SpeechRateModel> for RateTable {
    fn from(m: SpeechRateModel) -> Self {
        RateTable {
            default: m.default_rate,
            rates: m.rates,
        }
    }
}

impl Default for SpeechRateModel {
    fn default() -> Self {
        Self {
            default_rate: DEFAULT_SYLLABLES_PER_SECOND,
            rates: BTreeMap::new(),
        }
    }
}

impl SpeechRateModel {
    pub fn with_default(rate: f64) -> Result<Self, AlignmentError> {
        check_rate("default", rate)?;
        Ok(Self {
            default_rate: rate,
            rates: BTreeMap::new(),
        })
    }

    pub fn set_rate(&mut self, language: &str, rate: f64) -> Result<(), AlignmentError> {
        check_rate(language, rate)?;
        self.rates.insert(primary_language(language), rate);
        Ok(())
    }

    pub fn rate_for(&self, language: &str) -> f64 {
        self.rates
            .get(&primary_language(language))
            .copied()
            .unwrap_or(self.default_rate)
    }
}

fn check_rate(language: &str, rate: f64) -> Result<(), AlignmentError> {
    if rate > 1.0 && rate < 12.0 {
        Ok(())
    } else {
        Err(AlignmentError::InvalidRate {
            language: language.to_string(),
            rate,
        })
    }
}

fn is_latin_letter(c: char) -> bool {
    c.is_ascii_alphabetic()
        || (matches!(c as u32, 0xC0..=0x24F | 0x1E00..=0x1EFF)
            && c != '×'
            && c != '÷'
            && c.is_alphabetic())
}

fn is_vowel(c: char) -> bool {
    let base = c.nfd().next().unwrap_or(c).to_ascii_lowercase();
    matches!(base, 'a' | 'e' | 'i' | 'o' | 'u' | 'y')
        || matches!(c, 'æ' | 'Æ' | 'œ' | 'Œ' | 'ø' | 'Ø')
}

fn digit_syllables(c: char, language: &str) -> u32 {
    if language == "en" {
        // zero, seven
        match c {
            '0' | '7' => 2,
            _ => 1,
        }
    } else {
        1
    }
}

/// Counts syllables with crude script-aware rules:
///
/// * Vietnamese: one per whitespace token that contains a letter or digit.
/// * Latin script: maximal vowel groups (`aeiouy`, accents folded), at least
///   one per word.
/// * Other scripts: one per letter (CJK characters, kana, ...).
/// * Digits: syllables of each digit's spoken form.
pub fn estimate_syllables(text: &str, language: &str) -> u32 {
    let lang = primary_language(language);
    if lang == "vi" {
        return text
            .split_whitespace()
            .filter(|tok| tok.chars().any(char::is_alphanumeric))
            .count() as u32;
    }

    let mut total = 0;
    for word in text.split(|c: char| !(c.is_alphanumeric() || c == '\'' || c == '’')) {
        let mut groups = 0;
        let mut has_latin = false;
        let mut in_vowel = false;
        for c in word.chars() {
            if c.is_numeric() {
                total += digit_syllables(c, &lang);
                in_vowel = false;
            } else if is_latin_letter(c) {
                has_latin = true;
                if is_vowel(c) {
                    if !in_vowel {
                        groups += 1;
                    }
                    in_vowel = true;
                } else {
                    in_vowel = false;
                }
            } else if c.is_alphabetic() {
                total += 1;
                in_vowel = false;
            } else {
                in_vowel = false;
            }
        }
        if has_latin {
            total += groups.max(1);
        }
    }
    total
}

/// `round(1000 × syllables / rate)` milliseconds.
pub fn estimate_speech_duration(text: &str, language: &str, rates: &SpeechRateModel) -> u64 {
    let syllables = estimate_syllables(text, language);
    (1000.0 * syllables as f64 / rates.rate_for(language)).round() as u64
}

/// Index of the candidate whose estimated duration is closest to `slot_ms`;
/// ties go to the lowest index. `None` for an empty candidate list.
pub fn select_length_variant<S: AsRef<str>>(
    candidates: &[S],
    slot_ms: u64,
    language: &str,
    rates: &SpeechRateModel,
) -> Option<usize> {
    candidates
        .iter()
        .map(|c| estimate_speech_duration(c.as_ref(), language, rates).abs_diff(slot_ms))
        .enumerate()
        .min_by_key(|&(i, diff)| (diff, i))
        .map(|(i, _)| i)
}
