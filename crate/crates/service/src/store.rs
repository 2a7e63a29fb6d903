use std::collections::BTreeMap;

use dynabuf_core::RValue;

/// Named objects served read-only over GET.
#[derive(Debug, Clone, Default)]
pub struct ObjectStore {
    objects: BTreeMap<String, RValue>,
}

impl ObjectStore {
    pub fn new() -> Self {
        Self::default()
    }

    /// Store holding the sample data sets.
    pub fn builtin() -> Self {
        let mut s = Self::new();
        s.insert("animals", animals());
        s.insert("letters", RValue::string(('a'..='z').map(String::from)));
        s.insert("hist_example", hist_example());
        s
    }

    pub fn insert(&mut self, name: impl Into<String>, value: RValue) {
        self.objects.insert(name.into(), value);
    }

    pub fn get(&self, name: &str) -> Option<&RValue> {
        self.objects.get(name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.objects.keys().map(String::as_str)
    }
}

const ANIMALS: [(&str, f64, f64); 28] = [
    ("Mountain beaver", 1.35, 8.1),
    ("Cow", 465.0, 423.0),
    ("Grey wolf", 36.33, 119.5),
    ("Goat", 27.66, 115.0),
    ("Guinea pig", 1.04, 5.5),
    ("Dipliodocus", 11700.0, 50.0),
    ("Asian elephant", 2547.0, 4603.0),
    ("Donkey", 187.1, 419.0),
    ("Horse", 521.0, 655.0),
    ("Potar monkey", 10.0, 115.0),
    ("Cat", 3.3, 25.6),
    ("Giraffe", 529.0, 680.0),
    ("Gorilla", 207.0, 406.0),
    ("Human", 62.0, 1320.0),
    ("African elephant", 6654.0, 5712.0),
    ("Triceratops", 9400.0, 70.0),
    ("Rhesus monkey", 6.8, 179.0),
    ("Kangaroo", 35.0, 56.0),
    ("Golden hamster", 0.12, 1.0),
    ("Mouse", 0.023, 0.4),
    ("Rabbit", 2.5, 12.1),
    ("Sheep", 55.5, 175.0),
    ("Jaguar", 100.0, 157.0),
    ("Chimpanzee", 52.16, 440.0),
    ("Rat", 0.28, 1.9),
    ("Brachiosaurus", 87000.0, 154.5),
    ("Mole", 0.122, 3.0),
    ("Pig", 192.0, 180.0),
];

/// Body (kg) and brain (g) weights of 28 species, as a data frame.
pub fn animals() -> RValue {
    RValue::list(vec![
        RValue::real(ANIMALS.iter().map(|a| a.1).collect()),
        RValue::real(ANIMALS.iter().map(|a| a.2).collect()),
    ])
    .with_attr("names", RValue::string(["body", "brain"]))
    .with_attr("class", RValue::string(["data.frame"]))
    .with_attr("row.names", RValue::string(ANIMALS.iter().map(|a| a.0)))
}

fn hist_example() -> RValue {
    RValue::named_list([
        ("breaks", RValue::real((0..=5).map(f64::from).collect())),
        ("counts", RValue::int(vec![2, 6, 2, 4, 6])),
        ("name", RValue::string(["Example Histogram Created in Python"])),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;
    use dynabuf_core::RData;

    #[test]
    fn animals_shape() {
        let a = animals();
        let RData::List(cols) = &a.data else { panic!() };
        assert_eq!(cols.len(), 2);
        assert!(cols.iter().all(|c| c.len() == 28));
        assert_eq!(a.attr("row.names").unwrap().len(), 28);
        assert_eq!(a.names().unwrap()[0].as_deref(), Some("body"));
    }

    #[test]
    fn builtin_names() {
        let s = ObjectStore::builtin();
        assert_eq!(s.names().collect::<Vec<_>>(), ["animals", "hist_example", "letters"]);
        assert!(s.get("nope").is_none());
    }
}
