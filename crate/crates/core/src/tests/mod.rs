//! Cross-module tests that need whole scenarios or randomized corpora.

mod properties;
