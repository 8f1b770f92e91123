//! Persona microdata: the 21 behavioral indicators, their component grouping,
//! record loading and per-condition trait selection.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::io::Read;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Principal-component groups the indicators are organized into.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Component {
    Generosity,
    Punishment,
    InequalityAversionWtp,
    Wta,
    Uncertainty,
    Overconfidence,
}

impl Component {
    pub const ALL: [Component; 6] = [
        Component::Generosity,
        Component::Punishment,
        Component::InequalityAversionWtp,
        Component::Wta,
        Component::Uncertainty,
        Component::Overconfidence,
    ];

    pub fn indicators(self) -> impl Iterator<Item = Indicator> {
        Indicator::ALL.into_iter().filter(move |i| i.component() == self)
    }
}

/// One of the 21 incentivized behavioral indicators.
///
/// Declaration order is the column order of the component table (Generosity
/// group first, Overconfidence group last); the 21-trait prompt uses it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Indicator {
    ReciprocityHigh,
    ReciprocityLow,
    Altruism,
    Trust,
    AntiSocialPunishment,
    ProSocialPunishment,
    Patience,
    DislikeHavingMore,
    DislikeHavingLess,
    Wtp,
    RiskAversionCrCertain,
    RiskAversionCrLottery,
    Wta,
    RiskAversionGains,
    RiskAversionLosses,
    RiskAversionGainLoss,
    AmbiguityAversion,
    CompoundLotteryAversion,
    Overestimation,
    Overplacement,
    Overprecision,
}

impl Indicator {
    pub const COUNT: usize = 21;

    pub const ALL: [Indicator; 21] = [
        Indicator::ReciprocityHigh,
        Indicator::ReciprocityLow,
        Indicator::Altruism,
        Indicator::Trust,
        Indicator::AntiSocialPunishment,
        Indicator::ProSocialPunishment,
        Indicator::Patience,
        Indicator::DislikeHavingMore,
        Indicator::DislikeHavingLess,
        Indicator::Wtp,
        Indicator::RiskAversionCrCertain,
        Indicator::RiskAversionCrLottery,
        Indicator::Wta,
        Indicator::RiskAversionGains,
        Indicator::RiskAversionLosses,
        Indicator::RiskAversionGainLoss,
        Indicator::AmbiguityAversion,
        Indicator::CompoundLotteryAversion,
        Indicator::Overestimation,
        Indicator::Overplacement,
        Indicator::Overprecision,
    ];

    /// Representatives in the order the six-trait prompt lists them.
    pub const SIX_TRAIT_ORDER: [Indicator; 6] = [
        Indicator::ReciprocityHigh,
        Indicator::AntiSocialPunishment,
        Indicator::RiskAversionGains,
        Indicator::RiskAversionCrCertain,
        Indicator::AmbiguityAversion,
        Indicator::Overprecision,
    ];

    /// Column label used in microdata files.
    pub fn label(self) -> &'static str {
        match self {
            Indicator::ReciprocityHigh => "Reciprocity: High",
            Indicator::ReciprocityLow => "Reciprocity: Low",
            Indicator::Altruism => "Altruism",
            Indicator::Trust => "Trust",
            Indicator::AntiSocialPunishment => "Anti-social Punishment",
            Indicator::ProSocialPunishment => "Pro-social Punishment",
            Indicator::Patience => "Patience",
            Indicator::DislikeHavingMore => "Dislike Having More",
            Indicator::DislikeHavingLess => "Dislike Having Less",
            Indicator::Wtp => "WTP",
            Indicator::RiskAversionCrCertain => "Risk Aversion: CR (Certain)",
            Indicator::RiskAversionCrLottery => "Risk Aversion: CR (Lottery)",
            Indicator::Wta => "WTA",
            Indicator::RiskAversionGains => "Risk Aversion: Gains",
            Indicator::RiskAversionLosses => "Risk Aversion: Losses",
            Indicator::RiskAversionGainLoss => "Risk Aversion: Gain/Loss",
            Indicator::AmbiguityAversion => "Ambiguity Aversion",
            Indicator::CompoundLotteryAversion => "Compound Lottery Aversion",
            Indicator::Overestimation => "Overestimation",
            Indicator::Overplacement => "Overplacement",
            Indicator::Overprecision => "Overprecision",
        }
    }

    /// Label as written in the persona block of a prompt. A few indicators
    /// use a compact spelling there ("Reciprocity:High", "Risk Aversion: CR Certain").
    pub fn prompt_label(self) -> &'static str {
        match self {
            Indicator::ReciprocityHigh => "Reciprocity:High",
            Indicator::ReciprocityLow => "Reciprocity:Low",
            Indicator::RiskAversionCrCertain => "Risk Aversion: CR Certain",
            Indicator::RiskAversionCrLottery => "Risk Aversion: CR Lottery",
            Indicator::RiskAversionGains => "Risk Aversion:Gains",
            Indicator::RiskAversionLosses => "Risk Aversion:Losses",
            Indicator::RiskAversionGainLoss => "Risk Aversion:Gain/Loss",
            other => other.label(),
        }
    }

    pub fn component(self) -> Component {
        use Indicator::*;
        match self {
            ReciprocityHigh | ReciprocityLow | Altruism | Trust => Component::Generosity,
            AntiSocialPunishment | ProSocialPunishment | Patience => Component::Punishment,
            DislikeHavingMore | DislikeHavingLess | Wtp | RiskAversionCrCertain
            | RiskAversionCrLottery => Component::InequalityAversionWtp,
            Wta | RiskAversionGains | RiskAversionLosses | RiskAversionGainLoss => Component::Wta,
            AmbiguityAversion | CompoundLotteryAversion => Component::Uncertainty,
            Overestimation | Overplacement | Overprecision => Component::Overconfidence,
        }
    }

    /// True for the indicator loading most strongly on its component.
    pub fn is_component_representative(self) -> bool {
        Self::SIX_TRAIT_ORDER.contains(&self)
    }

    pub fn from_label(label: &str) -> Option<Indicator> {
        Self::ALL.into_iter().find(|i| i.label() == label)
    }

    fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Indicator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Which slice of a persona an agent is told about.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PersonaCondition {
    NoPersona,
    SixTraits,
    TwentyOneTraits,
}

impl PersonaCondition {
    pub const ALL: [PersonaCondition; 3] = [
        PersonaCondition::NoPersona,
        PersonaCondition::SixTraits,
        PersonaCondition::TwentyOneTraits,
    ];

    /// Short machine name used on the command line and in file names.
    pub fn key(self) -> &'static str {
        match self {
            PersonaCondition::NoPersona => "none",
            PersonaCondition::SixTraits => "six",
            PersonaCondition::TwentyOneTraits => "twenty_one",
        }
    }

    /// Row label in the alignment table.
    pub fn display_name(self) -> &'static str {
        match self {
            PersonaCondition::NoPersona => "Nothing",
            PersonaCondition::SixTraits => "6 Traits",
            PersonaCondition::TwentyOneTraits => "21 Traits",
        }
    }

    pub fn indicators(self) -> &'static [Indicator] {
        match self {
            PersonaCondition::NoPersona => &[],
            PersonaCondition::SixTraits => &Indicator::SIX_TRAIT_ORDER,
            PersonaCondition::TwentyOneTraits => &Indicator::ALL,
        }
    }
}

impl FromStr for PersonaCondition {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "none" | "no_persona" | "nothing" => Ok(PersonaCondition::NoPersona),
            "six" | "6" | "six_traits" => Ok(PersonaCondition::SixTraits),
            "twenty_one" | "21" | "twenty_one_traits" => Ok(PersonaCondition::TwentyOneTraits),
            other => Err(format!(
                "unknown persona condition {other:?} (expected none, six or twenty-one)"
            )),
        }
    }
}

impl fmt::Display for PersonaCondition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key())
    }
}

/// One survey participant: indicator z-scores plus demographics.
#[derive(Debug, Clone, PartialEq)]
pub struct PersonaRecord {
    pub persona_id: String,
    indicators: [f64; Indicator::COUNT],
    pub crt_score: u8,
    pub age: u32,
    pub gender: String,
    pub country: String,
}

impl PersonaRecord {
    pub fn new(
        persona_id: impl Into<String>,
        indicators: [f64; Indicator::COUNT],
        crt_score: u8,
        age: u32,
        gender: impl Into<String>,
        country: impl Into<String>,
    ) -> Result<Self, PersonaError> {
        let record = PersonaRecord {
            persona_id: persona_id.into(),
            indicators,
            crt_score,
            age,
            gender: gender.into(),
            country: country.into(),
        };
        record.validate()?;
        Ok(record)
    }

    /// All-zero indicators; handy for fixtures.
    pub fn neutral(persona_id: impl Into<String>) -> Self {
        PersonaRecord {
            persona_id: persona_id.into(),
            indicators: [0.0; Indicator::COUNT],
            crt_score: 0,
            age: 30,
            gender: "male".into(),
            country: "US".into(),
        }
    }

    pub fn value(&self, indicator: Indicator) -> f64 {
        self.indicators[indicator.index()]
    }

    pub fn set_value(&mut self, indicator: Indicator, value: f64) {
        self.indicators[indicator.index()] = value;
    }

    /// Mean z-score over the indicators of one component.
    pub fn component_mean(&self, component: Component) -> f64 {
        let (sum, n) = component
            .indicators()
            .fold((0.0, 0usize), |(s, n), i| (s + self.value(i), n + 1));
        sum / n as f64
    }

    pub fn validate(&self) -> Result<(), PersonaError> {
        let invalid = |reason: String| PersonaError::InvalidRecord {
            persona_id: self.persona_id.clone(),
            reason,
        };
        if self.persona_id.is_empty() {
            return Err(invalid("empty persona_id".into()));
        }
        if let Some(i) = Indicator::ALL.iter().find(|i| !self.value(**i).is_finite()) {
            return Err(invalid(format!("indicator {:?} is not finite", i.label())));
        }
        if self.crt_score > 3 {
            return Err(invalid(format!("crt_score {} outside 0..=3", self.crt_score)));
        }
        if self.age == 0 {
            return Err(invalid("age must be positive".into()));
        }
        Ok(())
    }
}

/// The ordered (label, value) pairs an agent sees for a given condition.
pub fn select_traits(record: &PersonaRecord, condition: PersonaCondition) -> Vec<(&'static str, f64)> {
    condition
        .indicators()
        .iter()
        .map(|&i| (i.prompt_label(), record.value(i)))
        .collect()
}

#[derive(Debug, Error)]
pub enum PersonaError {
    #[error("persona file is missing required column {0:?}")]
    MissingColumn(String),
    #[error("data row {row}: column {column:?}: {message}")]
    Row {
        row: usize,
        column: String,
        message: String,
    },
    #[error("data row {row}: duplicate persona_id {persona_id:?}")]
    DuplicateId { row: usize, persona_id: String },
    #[error("persona {persona_id:?}: {reason}")]
    InvalidRecord { persona_id: String, reason: String },
    #[error("malformed persona file: {0}")]
    Csv(#[from] csv::Error),
    #[error("cannot read persona file {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

pub const PERSONA_ID: &str = "persona_id";
pub const CRT_SCORE: &str = "crt_score";
pub const AGE: &str = "age";
pub const GENDER: &str = "gender";
pub const COUNTRY: &str = "country";

/// Maps canonical column names to the headers actually present in a file.
///
/// Canonical names are `persona_id`, the 21 indicator labels, `crt_score`,
/// `age`, `gender` and `country`. Unmapped names are looked up verbatim.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PersonaSchema {
    pub delimiter: Option<char>,
    pub columns: HashMap<String, String>,
}

impl PersonaSchema {
    pub fn header_for<'a>(&'a self, canonical: &'a str) -> &'a str {
        self.columns.get(canonical).map(String::as_str).unwrap_or(canonical)
    }

    fn delimiter_byte(&self) -> u8 {
        self.delimiter.map(|c| c as u8).unwrap_or(b',')
    }

    pub fn required_columns() -> Vec<&'static str> {
        let mut cols = vec![PERSONA_ID];
        cols.extend(Indicator::ALL.iter().map(|i| i.label()));
        cols.extend([CRT_SCORE, AGE, GENDER, COUNTRY]);
        cols
    }
}

pub fn load_personas_from_path(
    path: impl AsRef<Path>,
    schema: &PersonaSchema,
) -> Result<Vec<PersonaRecord>, PersonaError> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|source| PersonaError::Io {
        path: path.display().to_string(),
        source,
    })?;
    load_personas(file, schema)
}

/// Parse persona microdata. Records come back in file order; any invalid row
/// aborts the load.
pub fn load_personas<R: Read>(source: R, schema: &PersonaSchema) -> Result<Vec<PersonaRecord>, PersonaError> {
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(schema.delimiter_byte())
        .has_headers(true)
        .trim(csv::Trim::Headers)
        .from_reader(source);

    let headers = reader.headers()?.clone();
    let position = |canonical: &str| -> Result<usize, PersonaError> {
        let header = schema.header_for(canonical);
        headers
            .iter()
            .position(|h| h == header)
            .ok_or_else(|| PersonaError::MissingColumn(header.to_string()))
    };

    let id_col = position(PERSONA_ID)?;
    let mut indicator_cols = [0usize; Indicator::COUNT];
    for (slot, ind) in indicator_cols.iter_mut().zip(Indicator::ALL) {
        *slot = position(ind.label())?;
    }
    let crt_col = position(CRT_SCORE)?;
    let age_col = position(AGE)?;
    let gender_col = position(GENDER)?;
    let country_col = position(COUNTRY)?;

    let mut seen = HashSet::new();
    let mut records = Vec::new();
    for (i, row) in reader.records().enumerate() {
        let row_no = i + 1;
        let row = row?;
        let cell = |col: usize| row.get(col).unwrap_or("").trim();
        let row_err = |canonical: &str, message: String| PersonaError::Row {
            row: row_no,
            column: schema.header_for(canonical).to_string(),
            message,
        };

        let persona_id = cell(id_col).to_string();
        if persona_id.is_empty() {
            return Err(row_err(PERSONA_ID, "empty persona_id".into()));
        }
        if !seen.insert(persona_id.clone()) {
            return Err(PersonaError::DuplicateId {
                row: row_no,
                persona_id,
            });
        }

        let mut values = [0.0; Indicator::COUNT];
        for ((value, ind), col) in values.iter_mut().zip(Indicator::ALL).zip(indicator_cols) {
            let raw = cell(col);
            *value = raw
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| row_err(ind.label(), format!("expected a finite number, got {raw:?}")))?;
        }

        let crt_raw = cell(crt_col);
        let crt_score = crt_raw
            .parse::<u8>()
            .ok()
            .filter(|c| *c <= 3)
            .ok_or_else(|| row_err(CRT_SCORE, format!("expected an integer in 0..=3, got {crt_raw:?}")))?;
        let age_raw = cell(age_col);
        let age = age_raw
            .parse::<u32>()
            .ok()
            .filter(|a| *a > 0)
            .ok_or_else(|| row_err(AGE, format!("expected a positive integer, got {age_raw:?}")))?;

        records.push(PersonaRecord::new(
            persona_id,
            values,
            crt_score,
            age,
            cell(gender_col),
            cell(country_col),
        )?);
    }
    Ok(records)
}
