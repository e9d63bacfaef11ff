use sps_core::dsl;
use sps_core::encodings::{axioms, cellular, pcfg, transition, turing};
use sps_core::engine::{EngineConfig, EngineError, HaltReason, Policy, RuleSelector};
use sps_core::program::{Program, StrategyMode};
use sps_core::state::Key;
use sps_core::term::{sym, Value};

fn reload(p: &Program) -> Program {
    let text = dsl::program_to_text(p);
    dsl::load(&text).unwrap_or_else(|d| panic!("{}\n{text}", d.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("\n")))
}

#[test]
fn door_transition_system_follows_events() {
    let d = transition::door_system(3, true);
    for p in [transition::compile_transition_system(&d).unwrap(), reload(&transition::compile_transition_system(&d).unwrap())] {
        let sps = p.build(StrategyMode::Basic).unwrap();
        let actions = ["open_1", "open_3", "close_1", "close_2", "open_2"];
        let cfg = EngineConfig {
            policy: Policy::FirstMatch,
            max_steps: actions.len(),
            events: actions.iter().map(|a| vec![transition::action_event(a)]).collect(),
        };
        let res = sps.run(&cfg).unwrap();
        let state = res.state.get(&Key::new(sym(transition::STATE), vec![]));
        assert_eq!(state, Value::ind(&transition::simulate(&d, "s_ccc", &actions)));
        assert_eq!(res.derivation.len(), actions.len());
    }
}

#[test]
fn turing_machine_matches_simulator() {
    for input in ["0", "1", "1011", "111", "10011"] {
        let d = turing::binary_increment(input, input.len() + 3);
        let oracle = turing::simulate(&d, 500);
        let p = turing::compile_turing(&d).unwrap();
        let res = p.build(StrategyMode::Basic).unwrap().run(&p.engine_config(Some(500), None, None)).unwrap();
        assert_eq!(res.halt, HaltReason::Quiescent);
        assert_eq!(turing::read_tape(&d, &res.state), oracle.tape, "input {input}");
        assert_eq!(res.derivation.len(), oracle.steps);
    }
}

#[test]
fn turing_machine_off_tape_is_a_range_violation() {
    let d = turing::binary_increment("11", 3);
    assert!(turing::simulate(&d, 100).fell_off);
    let p = turing::compile_turing(&d).unwrap();
    let err = p.build(StrategyMode::Basic).unwrap().run(&p.engine_config(None, None, None)).unwrap_err();
    assert!(err.to_string().contains("off"), "{err}");
}

#[test]
fn identity_proof_by_script() {
    let d = axioms::hilbert(3);
    let p = axioms::compile_axioms(&d).unwrap();
    let sps = p.build(StrategyMode::Basic).unwrap();
    let script = axioms::IDENTITY_PROOF
        .iter()
        .map(|(r, b)| axioms::script_step(&d, r, b).unwrap())
        .collect();
    let cfg = EngineConfig { policy: Policy::Script(script), max_steps: 50, events: vec![] };
    let res = sps.run(&cfg).unwrap();
    let goal = Key::new(sym(axioms::PROVE), vec![d.formula("Imp(p, p)").unwrap()]);
    assert_eq!(res.state.get(&goal), Value::truth(true));
    assert_eq!(res.derivation.len(), 5);
    assert_eq!(res.halt, HaltReason::ScriptEnd);
}

#[test]
fn modus_ponens_fires_first_match() {
    let mut d = axioms::hilbert(2);
    d.axioms.clear();
    d.hypotheses = vec!["p".into(), "Imp(p, q)".into()];
    let p = axioms::compile_axioms(&d).unwrap();
    let res = p.build(StrategyMode::Basic).unwrap().run(&p.engine_config(Some(1), None, None)).unwrap();
    let q = Key::new(sym(axioms::PROVE), vec![d.formula("q").unwrap()]);
    assert_eq!(res.state.get(&q), Value::truth(true));
}

fn elementary(rule: u8, width: usize, generations: usize, mode: cellular::Mode) -> cellular::CellularDesc {
    let src = format!(
        "width = {width}\nrule = {rule}\ngenerations = {generations}\nmode = \"{}\"\ninitial = [\"{}1{}\"]\n",
        if mode == cellular::Mode::Sync { "sync" } else { "async" },
        "0".repeat(width / 2),
        "0".repeat(width - width / 2 - 1)
    );
    cellular::CellularDesc::from_toml(&src).unwrap()
}

fn run_ca(d: &cellular::CellularDesc) -> Vec<u8> {
    let p = cellular::compile_cellular(d).unwrap();
    let res = p.build(StrategyMode::Transformed).unwrap().run(&p.engine_config(None, None, None)).unwrap();
    cellular::read_grid(d, &res.state)
}

#[test]
fn elementary_automata_match_simulator() {
    for mode in [cellular::Mode::Sync, cellular::Mode::Async] {
        for rule in [30, 90, 110] {
            let d = elementary(rule, 16, 6, mode);
            assert_eq!(run_ca(&d), cellular::simulate(&d), "rule {rule} {mode:?}");
        }
    }
}

#[test]
fn glider_on_a_torus() {
    let src = r#"
        width = 6
        height = 6
        life = "B3/S23"
        initial = ["010", "001", "111"]
        generations = 4
    "#;
    let d = cellular::CellularDesc::from_toml(src).unwrap();
    let out = run_ca(&d);
    assert_eq!(out, cellular::simulate(&d));
    assert_eq!(cellular::render(&d, &out), "......\n..#...\n...#..\n.###..\n......\n......");
}

#[test]
fn grammar_derivation_probability() {
    let d = pcfg::example_grammar(6);
    let p = pcfg::compile_pcfg(&d).unwrap();
    let sps = p.build(StrategyMode::Basic).unwrap();
    let script = ["r1", "r1", "r1", "r2"].iter().map(|r| RuleSelector::rule(r)).collect();
    let res = sps.run(&EngineConfig { policy: Policy::Script(script), max_steps: 10, events: vec![] }).unwrap();
    let form = pcfg::read_form(&res.state).unwrap();
    let ids: Vec<&str> = res.derivation.iter().map(|r| r.split('[').next().unwrap()).collect();
    let (oracle_form, oracle_p) = pcfg::leftmost_derivation(&d, &ids).unwrap();
    assert_eq!(form, oracle_form);
    let pr = res.trace.last().and_then(|t| t.pr_cd).unwrap();
    assert!((pr - oracle_p).abs() < 1e-12, "{pr} vs {oracle_p}");
    assert_eq!(form, ["a", "a", "a", "b"]);

    // first match keeps choosing r1 until the form no longer fits
    let err = sps.run(&p.engine_config(Some(10), None, None)).unwrap_err();
    assert!(matches!(err.root(), EngineError::RangeViolation { .. }), "{err}");
}

#[test]
fn grammar_exploration_covers_the_language() {
    let d = pcfg::example_grammar(5);
    let p = pcfg::compile_pcfg(&d).unwrap();
    let ex = p.build(StrategyMode::Basic).unwrap().explore(10).unwrap();
    let oracle = pcfg::string_probabilities(&d, 10);
    let mut seen = std::collections::BTreeMap::new();
    for (_, w) in &ex.complete {
        let form = pcfg::read_form(w).unwrap();
        if form.iter().all(|x| d.terminals.contains(x)) {
            let pr = w.get(&Key::new(sym("Pr"), vec![w.get(&Key::new(sym("cd"), vec![]))])).as_real().unwrap();
            *seen.entry(form).or_insert(0.0) += pr;
        }
    }
    assert_eq!(seen.len(), oracle.len());
    for (s, p) in oracle {
        assert!((seen[&s] - p).abs() < 1e-12);
    }
}

#[test]
fn compiled_programs_survive_printing() {
    let programs = [
        turing::compile_turing(&turing::binary_increment("10", 5)).unwrap(),
        axioms::compile_axioms(&axioms::hilbert(2)).unwrap(),
        cellular::compile_cellular(&elementary(110, 6, 2, cellular::Mode::Async)).unwrap(),
        cellular::compile_cellular(&elementary(110, 6, 2, cellular::Mode::Sync)).unwrap(),
        pcfg::compile_pcfg(&pcfg::example_grammar(4)).unwrap(),
    ];
    for p in programs {
        let q = reload(&p);
        assert_eq!(dsl::program_to_text(&q), dsl::program_to_text(&p));
    }
}
