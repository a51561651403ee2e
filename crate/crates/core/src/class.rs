use alloc::collections::BTreeMap;
use core::fmt;
use core::str::FromStr;

use crate::error::Error;

/// Object categories of the NuScenes tracking benchmark.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum ObjectClass {
    Bicycle,
    Bus,
    Car,
    Motorcycle,
    Pedestrian,
    Trailer,
    Truck,
}

impl ObjectClass {
    pub const ALL: [ObjectClass; 7] = [
        ObjectClass::Bicycle,
        ObjectClass::Bus,
        ObjectClass::Car,
        ObjectClass::Motorcycle,
        ObjectClass::Pedestrian,
        ObjectClass::Trailer,
        ObjectClass::Truck,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ObjectClass::Bicycle => "bicycle",
            ObjectClass::Bus => "bus",
            ObjectClass::Car => "car",
            ObjectClass::Motorcycle => "motorcycle",
            ObjectClass::Pedestrian => "pedestrian",
            ObjectClass::Trailer => "trailer",
            ObjectClass::Truck => "truck",
        }
    }
}

impl fmt::Display for ObjectClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ObjectClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ObjectClass::ALL
            .iter()
            .copied()
            .find(|c| c.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Config(alloc::format!("unknown object class `{s}`")))
    }
}

/// A value per object class with a shared fallback.
#[derive(Debug, Clone, PartialEq)]
pub struct PerClass<T> {
    pub default: T,
    pub overrides: BTreeMap<ObjectClass, T>,
}

impl<T> PerClass<T> {
    pub fn uniform(default: T) -> Self {
        PerClass {
            default,
            overrides: BTreeMap::new(),
        }
    }

    pub fn with(mut self, class: ObjectClass, value: T) -> Self {
        self.overrides.insert(class, value);
        self
    }

    pub fn set(&mut self, class: ObjectClass, value: T) {
        self.overrides.insert(class, value);
    }

    pub fn get(&self, class: ObjectClass) -> &T {
        self.overrides.get(&class).unwrap_or(&self.default)
    }

    /// Replaces the default and every override with `value`.
    pub fn fill(&mut self, value: T) {
        self.overrides.clear();
        self.default = value;
    }
}

impl<T: Default> Default for PerClass<T> {
    fn default() -> Self {
        PerClass::uniform(T::default())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_names() {
        assert_eq!("Car".parse::<ObjectClass>().unwrap(), ObjectClass::Car);
        assert!("tram".parse::<ObjectClass>().is_err());
        for c in ObjectClass::ALL {
            assert_eq!(c.name().parse::<ObjectClass>().unwrap(), c);
        }
    }

    #[test]
    fn per_class_lookup() {
        let p = PerClass::uniform(0.16).with(ObjectClass::Bus, 0.3);
        assert_eq!(*p.get(ObjectClass::Bus), 0.3);
        assert_eq!(*p.get(ObjectClass::Car), 0.16);
    }
}
