//! Update-frequency accuracy: does the last modification date keep the
//! promise made by the declared update frequency?
//!
//! A dataset conforms when it was modified in the current or the previous
//! calendar period of its frequency, counted from the reference date. Periods
//! are calendar aligned (ISO weeks start on Monday, quarters and half-years
//! start in January). `unknown` and `irregular` accept any date.

use chrono::{Datelike, NaiveDate};
use serde::{Deserialize, Serialize};

use super::checks::{CheckOutcome, Conformance};
use super::DatasetRecord;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Frequency {
    Continuous,
    Daily,
    Weekly,
    Biweekly,
    Monthly,
    Quarterly,
    Semiannual,
    Annual,
    Irregular,
    Unknown,
}

impl Frequency {
    pub const ALL: [Frequency; 10] = [
        Frequency::Continuous,
        Frequency::Daily,
        Frequency::Weekly,
        Frequency::Biweekly,
        Frequency::Monthly,
        Frequency::Quarterly,
        Frequency::Semiannual,
        Frequency::Annual,
        Frequency::Irregular,
        Frequency::Unknown,
    ];

    /// Recognises plain terms ("monthly"), vocabulary codes ("ANNUAL_2",
    /// "UPDATE_CONT") and vocabulary URIs ending in either.
    pub fn parse(term: &str) -> Option<Frequency> {
        let tail = term.trim().rsplit(['/', '#']).next().unwrap_or("");
        let key: String = tail
            .chars()
            .filter(|c| !matches!(c, '-' | '_' | ' '))
            .flat_map(char::to_lowercase)
            .collect();
        let f = match key.as_str() {
            "continuous" | "cont" | "updatecont" | "nearrealtime" | "realtime" => Frequency::Continuous,
            "daily" => Frequency::Daily,
            "weekly" => Frequency::Weekly,
            "biweekly" | "fortnightly" => Frequency::Biweekly,
            "monthly" => Frequency::Monthly,
            "quarterly" => Frequency::Quarterly,
            "semiannual" | "annual2" | "halfyearly" | "biannual" => Frequency::Semiannual,
            "annual" | "annually" | "yearly" => Frequency::Annual,
            "irregular" | "irreg" => Frequency::Irregular,
            "unknown" | "unk" => Frequency::Unknown,
            _ => return None,
        };
        Some(f)
    }

    /// Whether any modification date satisfies this frequency.
    pub fn accepts_any_date(self) -> bool {
        matches!(self, Frequency::Irregular | Frequency::Unknown)
    }

    /// Calendar period containing `date`, as a monotone index.
    fn period_index(self, date: NaiveDate) -> Option<i64> {
        let days = i64::from(date.num_days_from_ce());
        // 0001-01-01 is a Monday with day number 1.
        let week = (days - 1).div_euclid(7);
        let year = i64::from(date.year());
        let month0 = i64::from(date.month0());
        let idx = match self {
            Frequency::Continuous | Frequency::Daily => days,
            Frequency::Weekly => week,
            Frequency::Biweekly => week.div_euclid(2),
            Frequency::Monthly => year * 12 + month0,
            Frequency::Quarterly => year * 4 + month0 / 3,
            Frequency::Semiannual => year * 2 + month0 / 6,
            Frequency::Annual => year,
            Frequency::Irregular | Frequency::Unknown => return None,
        };
        Some(idx)
    }

    /// True when `modified` falls in the current or previous period relative
    /// to `reference`. Later periods also pass: the dataset was refreshed
    /// after the reference date.
    pub fn is_current(self, modified: NaiveDate, reference: NaiveDate) -> bool {
        match (self.period_index(modified), self.period_index(reference)) {
            (Some(m), Some(r)) => m >= r - 1,
            _ => true,
        }
    }
}

pub fn check_update_frequency(record: &DatasetRecord, reference_date: NaiveDate) -> CheckOutcome {
    let outcome = |conformance, detail: String| CheckOutcome {
        dataset_id: record.dataset_id.clone(),
        criterion: "e4".into(),
        conformance,
        detail,
    };
    let Some(term) = record.update_frequency.as_deref().filter(|t| !t.trim().is_empty()) else {
        return outcome(Conformance::NotConforming, "no update frequency declared".into());
    };
    let Some(freq) = Frequency::parse(term) else {
        return outcome(Conformance::Undetermined, format!("unrecognised frequency term \"{term}\""));
    };
    if freq.accepts_any_date() {
        return outcome(Conformance::Conforms, format!("frequency {term} accepts any modification date"));
    }
    let Some(modified) = record.modified else {
        return outcome(Conformance::NotConforming, format!("frequency {term} declared but no modification date"));
    };
    if freq.is_current(modified, reference_date) {
        outcome(Conformance::Conforms, format!("modified {modified} within current or previous period of {term}"))
    } else {
        outcome(Conformance::NotConforming, format!("modified {modified} older than previous period of {term}"))
    }
}
