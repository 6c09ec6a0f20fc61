//! Name-keyed registries of strategy objects selected at run time.

use crate::error::{Error, Result};
use std::sync::Arc;

pub struct Registry<T: ?Sized> {
    kind: &'static str,
    entries: Vec<(String, Arc<T>)>,
}

impl<T: ?Sized> Registry<T> {
    pub fn new(kind: &'static str) -> Self {
        Registry { kind, entries: Vec::new() }
    }

    /// Register under `name`, replacing any previous entry.
    pub fn register(&mut self, name: &str, item: Arc<T>) {
        match self.entries.iter_mut().find(|(n, _)| n == name) {
            Some(slot) => slot.1 = item,
            None => self.entries.push((name.to_string(), item)),
        }
    }

    pub fn with(mut self, name: &str, item: Arc<T>) -> Self {
        self.register(name, item);
        self
    }

    pub fn get(&self, name: &str) -> Result<Arc<T>> {
        self.entries
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, item)| item.clone())
            .ok_or_else(|| Error::UnknownStrategy {
                kind: self.kind,
                name: name.to_string(),
                available: self.names().join(", "),
            })
    }

    pub fn names(&self) -> Vec<&str> {
        self.entries.iter().map(|(n, _)| n.as_str()).collect()
    }
}
