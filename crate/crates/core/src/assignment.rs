use serde::{Deserialize, Serialize};

/// Per-summary analysis opt-ins.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct AnalysisOptions {
    pub grammar: bool,
    pub words: bool,
    pub sentences: bool,
    pub tokens: bool,
    pub attention: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Slot {
    pub slot_id: String,
    pub text: String,
    #[serde(default)]
    pub options: AnalysisOptions,
}

/// One source text with any number of summary slots.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Assignment {
    pub id: String,
    pub source: String,
    pub slots: Vec<Slot>,
}

impl Assignment {
    /// Slot ids are `"{assignment_id}/{index}"`, so they are stable for a
    /// given assignment id.
    pub fn new<I>(id: impl Into<String>, source: impl Into<String>, summaries: I) -> Self
    where
        I: IntoIterator<Item = (String, AnalysisOptions)>,
    {
        let id = id.into();
        let slots = summaries
            .into_iter()
            .enumerate()
            .map(|(i, (text, options))| Slot {
                slot_id: format!("{id}/{i}"),
                text,
                options,
            })
            .collect();
        Assignment {
            id,
            source: source.into(),
            slots,
        }
    }

    pub fn slot(&self, slot: &str) -> Option<&Slot> {
        self.slots
            .iter()
            .enumerate()
            .find(|(i, s)| s.slot_id == slot || i.to_string() == slot)
            .map(|(_, s)| s)
    }
}
