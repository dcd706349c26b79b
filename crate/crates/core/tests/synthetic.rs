use std::collections::{BTreeMap, BTreeSet};

use chrono::NaiveDate;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use thinktank_core::dataset::synth::country_vocabulary;
use thinktank_core::dataset::{generate_synthetic_corpus, GeneratorSpec};
use thinktank_core::CountryCode;

fn spec(separability: f64) -> GeneratorSpec {
    GeneratorSpec {
        countries: ["ISR", "EGY", "IRN", "TUR", "USA", "CHN", "IND", "BRA"]
            .iter()
            .map(|c| CountryCode::new(c).unwrap())
            .collect(),
        entities_per_country: 25,
        relations_per_country: 10,
        events_per_country: 1000,
        start_date: NaiveDate::from_ymd_opt(2023, 1, 1).unwrap(),
        end_date: NaiveDate::from_ymd_opt(2024, 6, 30).unwrap(),
        separability,
        contexts_per_country: 20,
        object_skew: 1.0,
    }
}

#[test]
fn object_frequencies_fit_the_specified_distribution() {
    let spec = spec(0.6);
    let seed = 17;
    let store = generate_synthetic_corpus(&spec, seed).unwrap();
    for country in &spec.countries {
        let mut counts: BTreeMap<&str, f64> = BTreeMap::new();
        let events: Vec<_> = store.events.iter().filter(|e| &e.country == country).collect();
        assert_eq!(events.len(), 1000);
        for e in &events {
            *counts.entry(e.object.as_str()).or_default() += 1.0;
        }
        let dist = country_vocabulary(&spec, seed, country).object_distribution();
        let total: f64 = dist.iter().map(|(_, p)| p).sum();
        assert!((total - 1.0).abs() < 1e-9);
        let n = events.len() as f64;
        let mut statistic = 0.0;
        for (entity, p) in &dist {
            let expected = n * p;
            assert!(expected >= 5.0, "expected count {expected} too small for chi-square");
            let observed = counts.remove(entity.as_str()).unwrap_or(0.0);
            statistic += (observed - expected).powi(2) / expected;
        }
        assert!(counts.is_empty(), "objects outside the vocabulary: {counts:?}");
        let df = (dist.len() - 1) as f64;
        let p_value = 1.0 - ChiSquared::new(df).unwrap().cdf(statistic);
        assert!(p_value > 0.01, "{country}: chi-square {statistic:.2} on {df} df, p = {p_value:.4}");
    }
}

#[test]
fn full_separability_gives_disjoint_vocabularies() {
    let spec = spec(1.0);
    let store = generate_synthetic_corpus(&spec, 3).unwrap();
    let mut relations: BTreeMap<&CountryCode, BTreeSet<&str>> = BTreeMap::new();
    let mut entities: BTreeMap<&CountryCode, BTreeSet<&str>> = BTreeMap::new();
    for e in &store.events {
        relations.entry(&e.country).or_default().insert(&e.relation);
        let ents = entities.entry(&e.country).or_default();
        ents.insert(e.subject.as_str());
        ents.insert(e.object.as_str());
    }
    let countries: Vec<_> = relations.keys().copied().collect();
    for (i, a) in countries.iter().enumerate() {
        for b in &countries[i + 1..] {
            assert!(relations[a].is_disjoint(&relations[b]), "{a}/{b} share relations");
            assert!(entities[a].is_disjoint(&entities[b]), "{a}/{b} share entities");
        }
    }
}

#[test]
fn zero_separability_shares_everything() {
    let spec = spec(0.0);
    let a = country_vocabulary(&spec, 3, &spec.countries[0]);
    let b = country_vocabulary(&spec, 3, &spec.countries[1]);
    let set = |v: &[thinktank_core::EntityId]| v.iter().cloned().collect::<BTreeSet<_>>();
    assert_eq!(set(&a.entities), set(&b.entities));
    assert_ne!(a.entities, b.entities, "popularity order is country-specific");
}
