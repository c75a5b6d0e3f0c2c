//! Property-based checks of the analyzer's structural invariants: variable
//! expansion, shell word splitting, anchor/merge-key resolution, and wait
//! derivation hold over arbitrary inputs, not just the fixtures.

mod common;

use std::collections::BTreeMap;
use std::fmt::Write as _;

use cachelint_core::frontend::parse_str;
use cachelint_core::model::variables::{expand, is_predefined, references_in};
use cachelint_core::script::tokenize_job;
use indexmap::IndexMap;
use proptest::prelude::*;

/// Variable names the expansion scope can define.
fn name_strategy() -> impl Strategy<Value = String> {
    "[A-Z][A-Z0-9_]{0,6}"
}

/// Values and input texts: enough `$`, `{`, `}` to form well-formed,
/// malformed, escaped, and chained references.
fn value_strategy() -> impl Strategy<Value = String> {
    "[a-zA-Z0-9$/{}._ -]{0,24}"
}

fn scope_strategy() -> impl Strategy<Value = BTreeMap<String, String>> {
    prop::collection::btree_map(name_strategy(), value_strategy(), 0..5)
}

proptest! {
    /// Expansion always terminates, is deterministic, preserves the raw
    /// spelling, and only ever leaves platform-predefined references behind
    /// in a value it calls fully resolved. When it is fully resolved and no
    /// `$$` escapes muddy the water, expansion is idempotent.
    #[test]
    fn expansion_terminates_deterministically(
        text in value_strategy(),
        scope in scope_strategy(),
    ) {
        let scope: IndexMap<String, String> = scope.into_iter().collect();
        let first = expand(&text, &[&scope]);
        let second = expand(&text, &[&scope]);
        prop_assert_eq!(&first, &second);
        prop_assert_eq!(&first.raw, &text);
        // `$$` escapes legitimately leave literal dollars in the expansion,
        // so the leftover-reference and idempotence claims only hold when
        // nothing was escaped.
        let no_escapes = !text.contains("$$") && !scope.values().any(|v| v.contains("$$"));
        if first.fully_resolved && no_escapes {
            for name in references_in(&first.expanded) {
                prop_assert!(is_predefined(&name), "leftover reference ${{{name}}}");
            }
            let again = expand(&first.expanded, &[&scope]);
            prop_assert_eq!(&again.expanded, &first.expanded);
        }
    }
}

proptest! {
    /// Splitting a script line built from shell-neutral words gives exactly
    /// those words back, regardless of count or content. (`=` is excluded:
    /// a leading `NAME=` word is an assignment prefix, not an argument.)
    #[test]
    fn tokenizer_returns_joined_words_unchanged(
        words in prop::collection::vec("[a-zA-Z0-9_./][a-zA-Z0-9_./-]{0,11}", 1..8),
    ) {
        let line = words.join(" ");
        let yaml = format!("j:\n  script:\n    - {line}\n");
        let model = common::resolve_str(&yaml);
        let tokenized = tokenize_job(&model.jobs["j"]);
        prop_assert!(tokenized.warnings.is_empty(), "warnings: {:?}", tokenized.warnings);
        prop_assert_eq!(tokenized.commands.len(), 1);
        let argv = tokenized.commands[0].argv();
        prop_assert_eq!(argv, words.iter().map(|w| w.as_str()).collect::<Vec<_>>());
    }
}

proptest! {
    /// An aliased mapping is indistinguishable from writing the same
    /// mapping out by hand, both as a plain alias and through a merge key
    /// with an override.
    #[test]
    fn anchors_equal_handwritten_expansion(
        entries in prop::collection::btree_map("[A-Z]{1,6}", "[a-z0-9]{1,8}", 1..4),
    ) {
        let mut inline = String::new();
        for (key, value) in &entries {
            let _ = writeln!(inline, "    {key}: {value}");
        }

        let mut aliased = String::from(".defaults: &defs\n");
        for (key, value) in &entries {
            let _ = writeln!(aliased, "  {key}: {value}");
        }
        let _ = writeln!(aliased, "alias_job:\n  script: [run]\n  variables: *defs");
        let _ = writeln!(aliased, "merge_job:\n  script: [run]\n  variables:\n    <<: *defs\n    EXTRA_0: added");

        // Merge keys append merged-in entries after explicit ones, so the
        // handwritten form lists the override first.
        let mut written = String::from(".defaults:\n");
        for (key, value) in &entries {
            let _ = writeln!(written, "  {key}: {value}");
        }
        let _ = writeln!(written, "alias_job:\n  script: [run]\n  variables:\n{inline}");
        let _ = writeln!(written, "merge_job:\n  script: [run]\n  variables:\n    EXTRA_0: added\n{inline}");

        let aliased_root = parse_str(&aliased, "a.yml").unwrap().root;
        let written_root = parse_str(&written, "b.yml").unwrap().root;
        for job in ["alias_job", "merge_job"] {
            let a = aliased_root.get(job).and_then(|j| j.get("variables")).unwrap();
            let b = written_root.get(job).and_then(|j| j.get("variables")).unwrap();
            prop_assert!(a.structural_eq(b), "{job} variables differ");
        }

        // The equivalence must survive resolution too.
        let resolved_aliased = common::project_model(&common::resolve_str(&aliased));
        let resolved_written = common::project_model(&common::resolve_str(&written));
        prop_assert_eq!(resolved_aliased, resolved_written);
    }
}

proptest! {
    /// An explicit empty `needs` clause removes every wait; every other job
    /// keeps the waits the stage-product (or its own needs) dictates.
    #[test]
    fn empty_needs_removes_all_waits(
        stage_indices in prop::collection::vec(0..4usize, 2..6),
        chosen in any::<prop::sample::Index>(),
    ) {
        let chosen = chosen.index(stage_indices.len());
        let mut yaml = format!("stages: [{}]\n", common::STAGES.join(", "));
        for (i, stage) in stage_indices.iter().enumerate() {
            let _ = writeln!(yaml, "job{i}:");
            let _ = writeln!(yaml, "  stage: {}", common::STAGES[*stage]);
            if i == chosen {
                let _ = writeln!(yaml, "  needs: []");
            }
            let _ = writeln!(yaml, "  script: [run]");
        }
        let analyzed = common::analyze_str(&yaml, Some(false));
        let waits = analyzed.graph.upstreams(&format!("job{chosen}")).count();
        prop_assert_eq!(waits, 0);
        if let Err(message) = common::check_graph_reference(&analyzed.model, &analyzed.graph) {
            return Err(TestCaseError::fail(message));
        }
    }
}

proptest! {
    /// Building the graph twice from the same source yields the same nodes,
    /// edges, and rendering.
    #[test]
    fn graph_construction_is_deterministic(seed in any::<u64>()) {
        let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(seed);
        let yaml = common::emit_workflow(&common::generate(&mut rng));
        let first = common::analyze_str(&yaml, Some(true));
        let second = common::analyze_str(&yaml, Some(true));
        prop_assert_eq!(first.graph.nodes(), second.graph.nodes());
        prop_assert_eq!(
            first.graph.edges().collect::<Vec<_>>(),
            second.graph.edges().collect::<Vec<_>>()
        );
        prop_assert_eq!(first.graph.to_dot(), second.graph.to_dot());
    }
}
