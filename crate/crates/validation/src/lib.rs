//! Holds the `acceptance` test target; run it with
//! `cargo test -p shuffle-dp-validation --test acceptance`.
