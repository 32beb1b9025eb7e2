mod common;

use common::*;
use x10clocks_core::{check_program, format, parse, TypeErrorKind};

#[test]
fn typable_examples_are_accepted() {
    for name in TYPABLE {
        let r = check_program(&program(name));
        assert!(r.is_ok(), "{name}: {}", r.unwrap_err());
    }
}

#[test]
fn ill_typed_examples_are_rejected_with_their_diagnostics() {
    let cases = [
        ("ex4", TypeErrorKind::AlreadyQuiescent, "already quiescent", (4, 3)),
        ("ex5", TypeErrorKind::UndroppedClocks, "did not drop", (6, 3)),
        ("ex6", TypeErrorKind::ClockEscapesFinish, "not in scope of finish", (4, 5)),
    ];
    for (name, kind, text, (line, col)) in cases {
        let err = check_program(&program(name)).unwrap_err();
        assert_eq!(err.kind, kind, "{name}");
        assert!(err.message.contains(text), "{name}: {}", err.message);
        assert_eq!((err.location.start.line, err.location.start.col), (line, col), "{name}");
    }
}

#[test]
fn annotations_match_goldens() {
    for name in ["ex1", "ex2", "ex3", "ex7"] {
        let rendered = check_program(&program(name)).unwrap().render();
        if let Err(e) = match_annotations(&golden(name), &rendered) {
            panic!("{name}: {e}\n{rendered}");
        }
    }
}

#[test]
fn matcher_rejects_wrong_sets_and_inconsistent_renaming() {
    let rendered = "2:1  {x:clock(alpha1)},{alpha1},emptyset\n3:1  {y:clock(alpha2)},{alpha2},emptyset\n";
    assert!(match_annotations("2: {x:clock(beta)},{beta},emptyset", rendered).is_ok());
    assert!(match_annotations("2: {x:clock(alpha)},emptyset,emptyset", rendered).is_err());
    let both = "2: {x:clock(alpha)},{alpha},emptyset\n3: {y:clock(alpha)},{alpha},emptyset";
    assert!(match_annotations(both, rendered).is_err());
}

#[test]
fn corpus_round_trips_through_the_printer() {
    for name in CORPUS {
        let e = program(name);
        let text = format(&e);
        let again = parse(&text).unwrap_or_else(|err| panic!("{name}: {err}\n{text}"));
        assert_eq!(format(&again), text, "{name}");
        assert_eq!(check_program(&e).is_ok(), check_program(&again).is_ok(), "{name}");
    }
}
