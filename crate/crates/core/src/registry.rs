//! Name-keyed registry of strategy factories.
//!
//! Each algorithm family exposes a trait; concrete variants register a
//! factory under a stable name so configs and the CLI can select them at
//! runtime.

use std::collections::BTreeMap;
use std::fmt;

use crate::{Error, Result};

pub type Factory<T, C> = fn(&C) -> Box<T>;

pub struct Registry<T: ?Sized, C> {
    kind: &'static str,
    entries: BTreeMap<&'static str, Factory<T, C>>,
}

impl<T: ?Sized, C> Registry<T, C> {
    pub fn new(kind: &'static str) -> Self {
        Self {
            kind,
            entries: BTreeMap::new(),
        }
    }

    /// Registers `factory` under `name`, replacing any previous entry.
    pub fn register(&mut self, name: &'static str, factory: Factory<T, C>) -> &mut Self {
        self.entries.insert(name, factory);
        self
    }

    pub fn with(mut self, name: &'static str, factory: Factory<T, C>) -> Self {
        self.register(name, factory);
        self
    }

    pub fn create(&self, name: &str, config: &C) -> Result<Box<T>> {
        match self.entries.get(name) {
            Some(factory) => Ok(factory(config)),
            None => Err(Error::UnknownStrategy {
                kind: self.kind,
                name: name.to_string(),
                available: self.names().collect::<Vec<_>>().join(", "),
            }),
        }
    }

    pub fn contains(&self, name: &str) -> bool {
        self.entries.contains_key(name)
    }

    pub fn names(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.entries.keys().copied()
    }
}

impl<T: ?Sized, C> fmt::Debug for Registry<T, C> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Registry")
            .field("kind", &self.kind)
            .field("names", &self.entries.keys().collect::<Vec<_>>())
            .finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    trait Greeter {
        fn greet(&self) -> String;
    }

    struct Plain(String);
    impl Greeter for Plain {
        fn greet(&self) -> String {
            self.0.clone()
        }
    }

    #[test]
    fn lookup_by_name() {
        let reg: Registry<dyn Greeter, String> =
            Registry::new("greeter").with("plain", |c| Box::new(Plain(c.clone())));
        let g = reg.create("plain", &"hi".to_string()).unwrap();
        assert_eq!(g.greet(), "hi");
        assert!(reg.contains("plain"));
    }

    #[test]
    fn unknown_name_lists_alternatives() {
        let reg: Registry<dyn Greeter, String> =
            Registry::new("greeter").with("plain", |c| Box::new(Plain(c.clone())));
        let err = reg.create("fancy", &String::new()).err().unwrap();
        let msg = err.to_string();
        assert!(msg.contains("fancy") && msg.contains("plain"), "{msg}");
    }
}
