use std::collections::{HashMap, HashSet};
use std::fs;
use std::io::Write;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::FeaturizeError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Member {
    pub member_id: u64,
    pub party: String,
    pub district: String,
    pub seniority: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Committee {
    pub committee_id: String,
    pub member_ids: Vec<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chair_id: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sponsorship {
    pub bill_id: String,
    pub sponsor_id: u64,
    #[serde(default)]
    pub cosponsor_ids: Vec<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VoteChoice {
    Yes,
    No,
    Abstain,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Vote {
    pub bill_id: String,
    pub member_id: u64,
    pub vote: VoteChoice,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventRecord {
    pub timestamp: f64,
    pub actor_ids: Vec<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub outcome: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RecordBundle {
    pub members: Vec<Member>,
    pub committees: Vec<Committee>,
    pub sponsorships: Vec<Sponsorship>,
    pub votes: Vec<Vote>,
    pub events: Vec<EventRecord>,
}

fn read_table<T: DeserializeOwned>(dir: &Path, table: &str, required: bool) -> Result<Vec<T>, FeaturizeError> {
    let path = dir.join(format!("{table}.ndjson"));
    if !path.exists() && !required {
        return Ok(Vec::new());
    }
    let text = fs::read_to_string(&path)?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(k, l)| {
            serde_json::from_str(l).map_err(|e| FeaturizeError::Parse {
                table: table.into(),
                line: k + 1,
                message: e.to_string(),
            })
        })
        .collect()
}

fn write_table<T: Serialize>(dir: &Path, table: &str, rows: &[T]) -> Result<(), FeaturizeError> {
    let mut f = fs::File::create(dir.join(format!("{table}.ndjson")))?;
    for r in rows {
        let line = serde_json::to_string(r).map_err(|e| FeaturizeError::Invalid(e.to_string()))?;
        writeln!(f, "{line}")?;
    }
    Ok(())
}

impl RecordBundle {
    /// Reads the record tables from `dir`. Only `members.ndjson` is required.
    pub fn read_dir(dir: &Path) -> Result<Self, FeaturizeError> {
        Ok(Self {
            members: read_table(dir, "members", true)?,
            committees: read_table(dir, "committees", false)?,
            sponsorships: read_table(dir, "sponsorships", false)?,
            votes: read_table(dir, "votes", false)?,
            events: read_table(dir, "events", false)?,
        })
    }

    pub fn write_dir(&self, dir: &Path) -> Result<(), FeaturizeError> {
        fs::create_dir_all(dir)?;
        write_table(dir, "members", &self.members)?;
        write_table(dir, "committees", &self.committees)?;
        write_table(dir, "sponsorships", &self.sponsorships)?;
        write_table(dir, "votes", &self.votes)?;
        write_table(dir, "events", &self.events)
    }

    /// Member index by id.
    pub(crate) fn member_index(&self) -> HashMap<u64, usize> {
        self.members.iter().enumerate().map(|(k, m)| (m.member_id, k)).collect()
    }

    /// Checks referential integrity, unique member ids, one vote per member
    /// and bill, finite seniority and non-decreasing event timestamps.
    pub fn validate(&self) -> Result<(), FeaturizeError> {
        if self.members.is_empty() {
            return Err(FeaturizeError::EmptyInput("member list is empty".into()));
        }
        let ids = self.member_index();
        if ids.len() != self.members.len() {
            return Err(FeaturizeError::Invalid("duplicate member ids".into()));
        }
        if let Some(m) = self.members.iter().find(|m| !m.seniority.is_finite()) {
            return Err(FeaturizeError::Invalid(format!("member {} has non-finite seniority", m.member_id)));
        }
        let known = |id: u64, context: String| {
            if ids.contains_key(&id) {
                Ok(())
            } else {
                Err(FeaturizeError::Referential { id, context })
            }
        };
        for c in &self.committees {
            for &id in c.member_ids.iter().chain(&c.chair_id) {
                known(id, format!("committee {}", c.committee_id))?;
            }
            if let Some(chair) = c.chair_id {
                if !c.member_ids.contains(&chair) {
                    return Err(FeaturizeError::Invalid(format!(
                        "committee {} chair {chair} is not a member",
                        c.committee_id
                    )));
                }
            }
        }
        for s in &self.sponsorships {
            for &id in std::iter::once(&s.sponsor_id).chain(&s.cosponsor_ids) {
                known(id, format!("sponsorship of bill {}", s.bill_id))?;
            }
        }
        let mut seen = HashSet::new();
        for v in &self.votes {
            known(v.member_id, format!("vote on bill {}", v.bill_id))?;
            if !seen.insert((v.bill_id.as_str(), v.member_id)) {
                return Err(FeaturizeError::Invalid(format!(
                    "member {} votes twice on bill {}",
                    v.member_id, v.bill_id
                )));
            }
        }
        let mut prev = f64::NEG_INFINITY;
        for (k, e) in self.events.iter().enumerate() {
            if !(e.timestamp.is_finite() && e.timestamp >= 0.0) || e.timestamp < prev {
                return Err(FeaturizeError::Invalid(format!("event {k} timestamp {} out of order", e.timestamp)));
            }
            prev = e.timestamp;
            for &id in &e.actor_ids {
                known(id, format!("event {k}"))?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bundle() -> RecordBundle {
        RecordBundle {
            members: vec![
                Member { member_id: 1, party: "a".into(), district: "d1".into(), seniority: 2.0 },
                Member { member_id: 2, party: "b".into(), district: "d2".into(), seniority: 4.0 },
            ],
            committees: vec![Committee { committee_id: "c".into(), member_ids: vec![1, 2], chair_id: Some(1) }],
            sponsorships: vec![Sponsorship { bill_id: "b1".into(), sponsor_id: 1, cosponsor_ids: vec![2] }],
            votes: vec![Vote { bill_id: "b1".into(), member_id: 2, vote: VoteChoice::Abstain }],
            events: vec![EventRecord { timestamp: 1.0, actor_ids: vec![2], outcome: Some(0.5) }],
        }
    }

    #[test]
    fn directory_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let b = bundle();
        b.write_dir(dir.path()).unwrap();
        assert_eq!(RecordBundle::read_dir(dir.path()).unwrap(), b);
        std::fs::remove_file(dir.path().join("events.ndjson")).unwrap();
        assert!(RecordBundle::read_dir(dir.path()).unwrap().events.is_empty());
    }

    #[test]
    fn unknown_ids_are_named() {
        let mut b = bundle();
        b.votes.push(Vote { bill_id: "b2".into(), member_id: 77, vote: VoteChoice::Yes });
        let err = b.validate().unwrap_err();
        assert!(matches!(err, FeaturizeError::Referential { id: 77, .. }));
        assert!(err.to_string().contains("77"));
    }

    #[test]
    fn structural_problems_are_reported() {
        let mut b = bundle();
        b.events.push(EventRecord { timestamp: 0.5, actor_ids: vec![], outcome: None });
        assert!(matches!(b.validate(), Err(FeaturizeError::Invalid(_))));
        let mut b = bundle();
        b.votes.push(b.votes[0].clone());
        assert!(matches!(b.validate(), Err(FeaturizeError::Invalid(_))));
        assert!(matches!(RecordBundle::default().validate(), Err(FeaturizeError::EmptyInput(_))));
    }

    #[test]
    fn bad_line_reports_table_and_line() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("members.ndjson"), "{\"member_id\":1,\"party\":\"a\",\"district\":\"x\",\"seniority\":1}\n{oops\n").unwrap();
        match RecordBundle::read_dir(dir.path()) {
            Err(FeaturizeError::Parse { table, line, .. }) => assert_eq!((table.as_str(), line), ("members", 2)),
            other => panic!("unexpected {other:?}"),
        }
    }
}
