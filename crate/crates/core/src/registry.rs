//! Name-keyed registries of interchangeable strategies.
//!
//! Each family (stationary solvers, simulator lead-time models, optimization
//! workflows) exposes a trait object type and a `registry()` that maps a
//! stable name to a constructor. Configuration files and the CLI refer to
//! strategies only by these names.

use std::collections::BTreeMap;

use crate::error::{Error, Result};

type Factory<T> = Box<dyn Fn() -> Box<T> + Send + Sync>;

pub struct Registry<T: ?Sized> {
    kind: &'static str,
    default: &'static str,
    factories: BTreeMap<&'static str, Factory<T>>,
}

impl<T: ?Sized> Registry<T> {
    pub fn new(kind: &'static str, default: &'static str) -> Self {
        Registry {
            kind,
            default,
            factories: BTreeMap::new(),
        }
    }

    pub fn register<F>(&mut self, name: &'static str, factory: F) -> &mut Self
    where
        F: Fn() -> Box<T> + Send + Sync + 'static,
    {
        self.factories.insert(name, Box::new(factory));
        self
    }

    pub fn create(&self, name: &str) -> Result<Box<T>> {
        match self.factories.get(name) {
            Some(f) => Ok(f()),
            None => Err(Error::UnknownStrategy {
                kind: self.kind,
                name: name.to_string(),
                available: self.names().join(", "),
            }),
        }
    }

    pub fn create_default(&self) -> Box<T> {
        self.create(self.default)
            .expect("default strategy is always registered")
    }

    pub fn default_name(&self) -> &'static str {
        self.default
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.factories.keys().copied().collect()
    }

    pub fn contains(&self, name: &str) -> bool {
        self.factories.contains_key(name)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    trait Greeter {
        fn greet(&self) -> String;
    }
    struct Hello;
    impl Greeter for Hello {
        fn greet(&self) -> String {
            "hello".into()
        }
    }

    #[test]
    fn unknown_name_lists_alternatives() {
        let mut reg: Registry<dyn Greeter> = Registry::new("greeter", "hello");
        reg.register("hello", || Box::new(Hello));
        assert_eq!(reg.create("hello").unwrap().greet(), "hello");
        let err = reg.create("bye").err().unwrap().to_string();
        assert!(err.contains("greeter") && err.contains("hello"), "{err}");
        assert_eq!(reg.create_default().greet(), "hello");
    }
}
