use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Global image label. BI-RADS 0 and 6 are deliberately unrepresentable.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Label {
    Birads(u8),
    Normal,
    Benign,
    Malignant,
}

impl Label {
    pub fn birads(score: u8) -> Option<Self> {
        (1..=5).contains(&score).then_some(Label::Birads(score))
    }

    pub fn scheme(self) -> SchemeId {
        match self {
            Label::Birads(_) => SchemeId::Birads5,
            _ => SchemeId::Tri,
        }
    }

    /// Manifest token: `1`..`5` or `normal|benign|malignant`.
    pub fn token(self) -> String {
        match self {
            Label::Birads(n) => n.to_string(),
            Label::Normal => "normal".into(),
            Label::Benign => "benign".into(),
            Label::Malignant => "malignant".into(),
        }
    }

    pub fn parse_token(token: &str) -> Option<Self> {
        match token.trim() {
            "normal" => Some(Label::Normal),
            "benign" => Some(Label::Benign),
            "malignant" => Some(Label::Malignant),
            t => t.parse::<u8>().ok().and_then(Label::birads),
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Label::Birads(n) => write!(f, "BI-RADS {n}"),
            Label::Normal => f.write_str("Normal"),
            Label::Benign => f.write_str("Benign"),
            Label::Malignant => f.write_str("Malignant"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SchemeId {
    /// BI-RADS 1 through 5.
    Birads5,
    /// Normal / Benign / Malignant.
    Tri,
}

/// Class taxonomy plus the class sets the augmenters draw from.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LabelScheme {
    id: SchemeId,
    high_risk: BTreeSet<Label>,
    low_risk: BTreeSet<Label>,
}

impl LabelScheme {
    /// Default sets: BI-RADS {3,4,5} vs {1,2}; TRI {benign, malignant} vs {normal}.
    pub fn new(id: SchemeId) -> Self {
        let (high, low): (&[Label], &[Label]) = match id {
            SchemeId::Birads5 => (
                &[Label::Birads(3), Label::Birads(4), Label::Birads(5)],
                &[Label::Birads(1), Label::Birads(2)],
            ),
            SchemeId::Tri => (&[Label::Benign, Label::Malignant], &[Label::Normal]),
        };
        Self {
            id,
            high_risk: high.iter().copied().collect(),
            low_risk: low.iter().copied().collect(),
        }
    }

    pub fn with_sets(
        id: SchemeId,
        high_risk: impl IntoIterator<Item = Label>,
        low_risk: impl IntoIterator<Item = Label>,
    ) -> Result<Self> {
        let high_risk: BTreeSet<Label> = high_risk.into_iter().collect();
        let low_risk: BTreeSet<Label> = low_risk.into_iter().collect();
        if let Some(l) = high_risk.iter().chain(&low_risk).find(|l| l.scheme() != id) {
            return Err(Error::InvalidScheme(format!("{l} is not a {id:?} class")));
        }
        if let Some(l) = high_risk.intersection(&low_risk).next() {
            return Err(Error::InvalidScheme(format!(
                "{l} is in both the high- and low-risk sets"
            )));
        }
        Ok(Self {
            id,
            high_risk,
            low_risk,
        })
    }

    pub fn id(&self) -> SchemeId {
        self.id
    }

    /// All classes in canonical order.
    pub fn classes(&self) -> Vec<Label> {
        match self.id {
            SchemeId::Birads5 => (1..=5).map(Label::Birads).collect(),
            SchemeId::Tri => vec![Label::Normal, Label::Benign, Label::Malignant],
        }
    }

    pub fn contains(&self, label: Label) -> bool {
        label.scheme() == self.id
    }

    pub fn parse_label(&self, token: &str) -> Option<Label> {
        Label::parse_token(token).filter(|l| self.contains(*l))
    }

    pub fn is_high_risk(&self, label: Label) -> bool {
        self.high_risk.contains(&label)
    }

    pub fn is_low_risk(&self, label: Label) -> bool {
        self.low_risk.contains(&label)
    }

    pub fn high_risk(&self) -> &BTreeSet<Label> {
        &self.high_risk
    }

    pub fn low_risk(&self) -> &BTreeSet<Label> {
        &self.low_risk
    }
}

impl Default for LabelScheme {
    fn default() -> Self {
        Self::new(SchemeId::Birads5)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tokens() {
        assert_eq!(Label::parse_token("4"), Some(Label::Birads(4)));
        assert_eq!(Label::parse_token("0"), None);
        assert_eq!(Label::parse_token("6"), None);
        assert_eq!(Label::parse_token("benign"), Some(Label::Benign));
        assert_eq!(Label::parse_token("Benign"), None);
        for l in LabelScheme::new(SchemeId::Tri).classes() {
            assert_eq!(Label::parse_token(&l.token()), Some(l));
        }
    }

    #[test]
    fn default_sets_are_disjoint() {
        for id in [SchemeId::Birads5, SchemeId::Tri] {
            let s = LabelScheme::new(id);
            assert!(s.high_risk().is_disjoint(s.low_risk()));
        }
        let s = LabelScheme::default();
        assert!(s.is_high_risk(Label::Birads(3)) && s.is_low_risk(Label::Birads(2)));
    }

    #[test]
    fn overlapping_sets_rejected() {
        let r = LabelScheme::with_sets(
            SchemeId::Birads5,
            [Label::Birads(3)],
            [Label::Birads(3), Label::Birads(1)],
        );
        assert!(r.is_err());
        assert!(LabelScheme::with_sets(SchemeId::Birads5, [Label::Normal], []).is_err());
    }
}
