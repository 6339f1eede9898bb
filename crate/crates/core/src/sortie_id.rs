//! Sortie identifier standards used across the archive.
//!
//! Four label families exist. Three are slash-separated and parse
//! unambiguously in the precedence order DOS contract, military unit,
//! commercial survey. Pre-standardization U.S. Army Air Force labels have no
//! grammar and are only accepted when the caller says so.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SortieIdError {
    #[error("sortie_id: empty identifier")]
    Empty,
    #[error("sortie_id: {text:?} matches no identifier grammar ({})", format_failures(.failures))]
    NoMatch {
        text: String,
        failures: Vec<RuleFailure>,
    },
    #[error("sortie_id: invalid {field}: {reason}")]
    InvalidField { field: &'static str, reason: String },
}

/// Why one grammar rule rejected an input.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RuleFailure {
    pub rule: &'static str,
    pub reason: String,
}

fn format_failures(failures: &[RuleFailure]) -> String {
    failures
        .iter()
        .map(|f| format!("{}: {}", f.rule, f.reason))
        .collect::<Vec<_>>()
        .join("; ")
}

/// Two uppercase ASCII letters, stored verbatim (historical codes such as
/// `BC` are not mapped to modern ISO codes).
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct CountryCode(String);

impl CountryCode {
    pub fn new(code: &str) -> Result<Self, SortieIdError> {
        if is_country_code(code) {
            Ok(Self(code.to_owned()))
        } else {
            Err(SortieIdError::InvalidField {
                field: "country_code",
                reason: format!("{code:?} is not two uppercase letters"),
            })
        }
    }
    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl TryFrom<String> for CountryCode {
    type Error = SortieIdError;
    fn try_from(value: String) -> Result<Self, Self::Error> {
        Self::new(&value)
    }
}

impl From<CountryCode> for String {
    fn from(value: CountryCode) -> Self {
        value.0
    }
}

impl fmt::Display for CountryCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "variant")]
pub enum SortieId {
    /// `contract/CC/film`, e.g. `4/BC/0056`.
    DosContract {
        contract_number: u32,
        country_code: CountryCode,
        film_number: u32,
    },
    /// `unit/service/mission`, e.g. `58/RAF/0456`.
    MilitaryUnit {
        unit: String,
        service: String,
        mission_number: u32,
    },
    /// `company/CC/YY/film`, e.g. `HSL/GH/64/0034`.
    CommercialSurvey {
        company: String,
        country_code: CountryCode,
        year_two_digit: u8,
        film_number: u32,
    },
    /// Locally created label kept as raw slash-separated tokens.
    UsArmyAirForce { raw: Vec<String>, standardized: bool },
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ParseOptions {
    /// Treat the input as a U.S. Army Air Force label.
    pub us_army_air_force: bool,
}

fn is_token(s: &str) -> bool {
    !s.is_empty() && s.bytes().all(|b| b.is_ascii_alphanumeric())
}

fn is_country_code(s: &str) -> bool {
    s.len() == 2 && s.bytes().all(|b| b.is_ascii_uppercase())
}

fn is_digits(s: &str) -> bool {
    !s.is_empty() && s.bytes().all(|b| b.is_ascii_digit())
}

fn positive_number(field: &'static str, s: &str) -> Result<u32, String> {
    if !is_digits(s) {
        return Err(format!("{field} {s:?} is not a decimal number"));
    }
    match s.parse::<u32>() {
        Ok(0) => Err(format!("{field} must be positive")),
        Ok(n) => Ok(n),
        Err(_) => Err(format!("{field} {s:?} is out of range")),
    }
}

fn parse_dos_contract(segments: &[&str]) -> Result<SortieId, String> {
    let [contract, country, film] = segments else {
        return Err(format!("expected 3 segments, found {}", segments.len()));
    };
    let contract_number = positive_number("contract number", contract)?;
    if !is_country_code(country) {
        return Err(format!("{country:?} is not a two-letter country code"));
    }
    let film_number = positive_number("film number", film)?;
    Ok(SortieId::DosContract {
        contract_number,
        country_code: CountryCode(country.to_string()),
        film_number,
    })
}

fn parse_military_unit(segments: &[&str]) -> Result<SortieId, String> {
    let [unit, service, mission] = segments else {
        return Err(format!("expected 3 segments, found {}", segments.len()));
    };
    if !is_token(unit) {
        return Err(format!("unit {unit:?} is not an alphanumeric token"));
    }
    if !is_token(service) {
        return Err(format!("service {service:?} is not an alphanumeric token"));
    }
    if is_digits(unit) && is_country_code(service) {
        return Err("numeric unit with a two-letter code is DOS-contract shaped".into());
    }
    let mission_number = positive_number("mission number", mission)?;
    Ok(SortieId::MilitaryUnit {
        unit: unit.to_string(),
        service: service.to_string(),
        mission_number,
    })
}

fn parse_commercial_survey(segments: &[&str]) -> Result<SortieId, String> {
    let [company, country, year, film] = segments else {
        return Err(format!("expected 4 segments, found {}", segments.len()));
    };
    if !is_token(company) {
        return Err(format!("company {company:?} is not an alphanumeric token"));
    }
    if !is_country_code(country) {
        return Err(format!("{country:?} is not a two-letter country code"));
    }
    if year.len() != 2 || !is_digits(year) {
        return Err(format!("year {year:?} is not two digits"));
    }
    let film_number = positive_number("film number", film)?;
    Ok(SortieId::CommercialSurvey {
        company: company.to_string(),
        country_code: CountryCode(country.to_string()),
        year_two_digit: year.parse().expect("two ascii digits"),
        film_number,
    })
}

type Rule = (&'static str, fn(&[&str]) -> Result<SortieId, String>);

const RULES: [Rule; 3] = [
    ("dos_contract", parse_dos_contract),
    ("military_unit", parse_military_unit),
    ("commercial_survey", parse_commercial_survey),
];

pub fn parse(text: &str) -> Result<SortieId, SortieIdError> {
    parse_with(text, ParseOptions::default())
}

pub fn parse_with(text: &str, options: ParseOptions) -> Result<SortieId, SortieIdError> {
    let text = text.trim();
    if text.is_empty() {
        return Err(SortieIdError::Empty);
    }
    let segments: Vec<&str> = text.split('/').collect();

    if options.us_army_air_force {
        if let Some(bad) = segments.iter().find(|s| s.trim().is_empty()) {
            return Err(SortieIdError::NoMatch {
                text: text.to_string(),
                failures: vec![RuleFailure {
                    rule: "us_army_air_force",
                    reason: format!("empty token {bad:?}"),
                }],
            });
        }
        let standardized = parse_military_unit(&segments).is_ok();
        return Ok(SortieId::UsArmyAirForce {
            raw: segments.iter().map(|s| s.trim().to_string()).collect(),
            standardized,
        });
    }

    if !(2..=4).contains(&segments.len()) {
        return Err(SortieIdError::NoMatch {
            text: text.to_string(),
            failures: vec![RuleFailure {
                rule: "segment_count",
                reason: format!(
                    "{} slash-separated segments; standard labels have 3 or 4",
                    segments.len()
                ),
            }],
        });
    }

    let mut failures = Vec::with_capacity(RULES.len());
    for (rule, parse_rule) in RULES {
        match parse_rule(&segments) {
            Ok(id) => return Ok(id),
            Err(reason) => failures.push(RuleFailure { rule, reason }),
        }
    }
    Err(SortieIdError::NoMatch {
        text: text.to_string(),
        failures,
    })
}

impl SortieId {
    /// Validates field invariants, including that the id survives a
    /// format/parse round trip (a numeric unit with a two-letter service
    /// would otherwise read back as a DOS contract).
    pub fn validate(&self) -> Result<(), SortieIdError> {
        let invalid = |field, reason: &str| {
            Err(SortieIdError::InvalidField {
                field,
                reason: reason.to_string(),
            })
        };
        match self {
            SortieId::DosContract {
                contract_number,
                film_number,
                ..
            } => {
                if *contract_number == 0 {
                    return invalid("contract_number", "must be positive");
                }
                if *film_number == 0 {
                    return invalid("film_number", "must be positive");
                }
            }
            SortieId::MilitaryUnit {
                unit,
                service,
                mission_number,
            } => {
                if !is_token(unit) {
                    return invalid("unit", "must be a non-empty alphanumeric token");
                }
                if !is_token(service) {
                    return invalid("service", "must be a non-empty alphanumeric token");
                }
                if *mission_number == 0 {
                    return invalid("mission_number", "must be positive");
                }
                if is_digits(unit) && is_country_code(service) {
                    return invalid(
                        "service",
                        "numeric unit with a two-letter service is indistinguishable from a DOS contract",
                    );
                }
            }
            SortieId::CommercialSurvey {
                company,
                year_two_digit,
                film_number,
                ..
            } => {
                if !is_token(company) {
                    return invalid("company", "must be a non-empty alphanumeric token");
                }
                if *year_two_digit > 99 {
                    return invalid("year_two_digit", "must be 0-99");
                }
                if *film_number == 0 {
                    return invalid("film_number", "must be positive");
                }
            }
            SortieId::UsArmyAirForce { raw, .. } => {
                if raw.is_empty() || raw.iter().any(|t| t.trim().is_empty() || t.contains('/')) {
                    return invalid("raw", "tokens must be non-empty and slash-free");
                }
            }
        }
        Ok(())
    }

    /// Four-digit calendar year; two-digit years are read as 19xx.
    pub fn year(&self) -> Option<u16> {
        match self {
            SortieId::CommercialSurvey { year_two_digit, .. } => Some(1900 + *year_two_digit as u16),
            _ => None,
        }
    }

    pub fn variant_name(&self) -> &'static str {
        match self {
            SortieId::DosContract { .. } => "DosContract",
            SortieId::MilitaryUnit { .. } => "MilitaryUnit",
            SortieId::CommercialSurvey { .. } => "CommercialSurvey",
            SortieId::UsArmyAirForce { .. } => "UsArmyAirForce",
        }
    }
}

pub fn canonical_format(id: &SortieId) -> String {
    id.to_string()
}

impl fmt::Display for SortieId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SortieId::DosContract {
                contract_number,
                country_code,
                film_number,
            } => write!(f, "{contract_number}/{country_code}/{film_number:04}"),
            SortieId::MilitaryUnit {
                unit,
                service,
                mission_number,
            } => write!(f, "{unit}/{service}/{mission_number:04}"),
            SortieId::CommercialSurvey {
                company,
                country_code,
                year_two_digit,
                film_number,
            } => write!(
                f,
                "{company}/{country_code}/{year_two_digit:02}/{film_number:04}"
            ),
            SortieId::UsArmyAirForce { raw, .. } => f.write_str(&raw.join("/")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exemplar_labels() {
        assert_eq!(
            parse("4/BC/0056").unwrap(),
            SortieId::DosContract {
                contract_number: 4,
                country_code: CountryCode::new("BC").unwrap(),
                film_number: 56,
            }
        );
        assert_eq!(
            parse("58/RAF/0456").unwrap(),
            SortieId::MilitaryUnit {
                unit: "58".into(),
                service: "RAF".into(),
                mission_number: 456,
            }
        );
        let hsl = parse("HSL/GH/64/0034").unwrap();
        assert_eq!(
            hsl,
            SortieId::CommercialSurvey {
                company: "HSL".into(),
                country_code: CountryCode::new("GH").unwrap(),
                year_two_digit: 64,
                film_number: 34,
            }
        );
        assert_eq!(hsl.year(), Some(1964));
    }

    #[test]
    fn canonical_padding() {
        assert_eq!(canonical_format(&parse("4/BC/56").unwrap()), "4/BC/0056");
        assert_eq!(canonical_format(&parse("58/RAF/456").unwrap()), "58/RAF/0456");
        assert_eq!(canonical_format(&parse("4/BC/12345").unwrap()), "4/BC/12345");
    }

    #[test]
    fn rejects_bad_segment_counts() {
        for text in ["4", "4/BC", "a/b/c/d/e", "1/2/3/4/5/6"] {
            assert!(parse(text).is_err(), "{text}");
        }
        assert_eq!(parse("   "), Err(SortieIdError::Empty));
    }

    #[test]
    fn failure_names_every_rule() {
        let err = parse("4/bc/00x6").unwrap_err();
        let SortieIdError::NoMatch { failures, .. } = &err else {
            panic!("{err:?}")
        };
        let rules: Vec<_> = failures.iter().map(|f| f.rule).collect();
        assert_eq!(rules, ["dos_contract", "military_unit", "commercial_survey"]);
        assert!(err.to_string().contains("dos_contract"));
    }

    #[test]
    fn zero_numbers_rejected() {
        assert!(parse("0/BC/0056").is_err());
        assert!(parse("4/BC/0000").is_err());
        assert!(parse("HSL/GH/64/0000").is_err());
    }

    #[test]
    fn usaaf_requires_hint() {
        assert!(parse("7PG/5M/33/V").is_err());
        let id = parse_with(
            "US/7PG/5M/33/V",
            ParseOptions {
                us_army_air_force: true,
            },
        )
        .unwrap();
        assert_eq!(
            id,
            SortieId::UsArmyAirForce {
                raw: vec!["US".into(), "7PG".into(), "5M".into(), "33".into(), "V".into()],
                standardized: false,
            }
        );
        let std = parse_with(
            "91/USAF/0012",
            ParseOptions {
                us_army_air_force: true,
            },
        )
        .unwrap();
        assert!(matches!(std, SortieId::UsArmyAirForce { standardized: true, .. }));
        assert_eq!(std.to_string(), "91/USAF/0012");
    }

    #[test]
    fn json_has_variant_discriminator() {
        let json = serde_json::to_string(&parse("4/BC/0056").unwrap()).unwrap();
        assert_eq!(
            json,
            r#"{"variant":"DosContract","contract_number":4,"country_code":"BC","film_number":56}"#
        );
        let back: SortieId = serde_json::from_str(&json).unwrap();
        assert_eq!(back.to_string(), "4/BC/0056");
        assert!(serde_json::from_str::<SortieId>(
            r#"{"variant":"DosContract","contract_number":4,"country_code":"bc","film_number":56}"#
        )
        .is_err());
    }

    #[test]
    fn ambiguous_military_unit_is_invalid() {
        let id = SortieId::MilitaryUnit {
            unit: "12".into(),
            service: "RN".into(),
            mission_number: 3,
        };
        assert!(id.validate().is_err());
        let ok = SortieId::MilitaryUnit {
            unit: "FAA".into(),
            service: "RN".into(),
            mission_number: 3,
        };
        assert!(ok.validate().is_ok());
        assert_eq!(parse(&ok.to_string()).unwrap(), ok);
    }
}
