use loaded_mkdv::gammaparse::{parse_gamma, BinOp, ExprNode, Func, GammaError};
use proptest::prelude::*;

fn number() -> impl Strategy<Value = f64> {
    prop_oneof![
        (0u32..100).prop_map(f64::from),
        (0u32..10_000).prop_map(|n| f64::from(n) / 64.0),
        (1e-6f64..1e6),
    ]
}

/// `-? NUMBER (^ exponent)?`, the only exponent shape the grammar accepts.
fn exponent() -> impl Strategy<Value = ExprNode> {
    let sign = |neg: bool, e: ExprNode| if neg { ExprNode::neg(e) } else { e };
    let leaf = (any::<bool>(), number()).prop_map(move |(n, v)| sign(n, ExprNode::Number(v)));
    leaf.prop_recursive(3, 6, 1, move |inner| {
        (any::<bool>(), number(), inner).prop_map(move |(n, b, e)| {
            sign(n, ExprNode::binary(BinOp::Pow, ExprNode::Number(b), e))
        })
    })
}

fn expr() -> impl Strategy<Value = ExprNode> {
    let leaf = prop_oneof![number().prop_map(ExprNode::Number), Just(ExprNode::Var)];
    leaf.prop_recursive(5, 40, 2, |inner| {
        let op = prop_oneof![
            Just(BinOp::Add),
            Just(BinOp::Sub),
            Just(BinOp::Mul),
            Just(BinOp::Div)
        ];
        prop_oneof![
            inner.clone().prop_map(ExprNode::neg),
            (op, inner.clone(), inner.clone()).prop_map(|(o, a, b)| ExprNode::binary(o, a, b)),
            (inner.clone(), exponent()).prop_map(|(a, e)| ExprNode::binary(BinOp::Pow, a, e)),
            (prop::sample::select(Func::ALL.to_vec()), inner)
                .prop_map(|(f, a)| ExprNode::call(f, a)),
        ]
    })
}

/// Direct interpretation, used as the evaluation oracle.
fn interpret(e: &ExprNode, t: f64) -> f64 {
    match e {
        ExprNode::Number(v) => *v,
        ExprNode::Var => t,
        ExprNode::Neg(a) => -interpret(a, t),
        ExprNode::Binary(op, a, b) => {
            let (a, b) = (interpret(a, t), interpret(b, t));
            match op {
                BinOp::Add => a + b,
                BinOp::Sub => a - b,
                BinOp::Mul => a * b,
                BinOp::Div => a / b,
                BinOp::Pow => a.powf(b),
            }
        }
        ExprNode::Call(f, a) => {
            let x = interpret(a, t);
            match f {
                Func::Sin => x.sin(),
                Func::Cos => x.cos(),
                Func::Tan => x.tan(),
                Func::Tanh => x.tanh(),
                Func::Coth => 1.0 / x.tanh(),
                Func::Cot => 1.0 / x.tan(),
                Func::Sqrt => x.sqrt(),
                Func::Exp => x.exp(),
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn display_round_trips(e in expr()) {
        let text = e.to_string();
        prop_assert_eq!(parse_gamma(&text).unwrap(), e);
    }

    #[test]
    fn never_panics_on_arbitrary_input(s in "\\PC{0,40}") {
        let _ = parse_gamma(&s);
    }

    #[test]
    fn never_panics_on_grammar_fragments(
        parts in prop::collection::vec(
            prop::sample::select(vec!["t", "1", "2.5", "+", "-", "*", "/", "^", "(", ")", "sin", "coth", "1e", "."]),
            0..20,
        )
    ) {
        let _ = parse_gamma(&parts.concat());
    }

    #[test]
    fn finite_results_agree_with_direct_interpretation(e in expr(), t in -3.0f64..3.0) {
        let direct = interpret(&e, t);
        if !direct.is_finite() {
            prop_assert!(e.eval(t).is_err());
        }
        match e.eval(t) {
            Ok(v) => prop_assert_eq!(v.to_bits(), direct.to_bits()),
            Err(GammaError::Domain { .. }) => {}
            Err(other) => prop_assert!(false, "unexpected {:?}", other),
        }
    }
}

#[test]
fn reference_values() {
    let cases = [
        ("2*t + 1", 3.0, 7.0),
        ("-t^2", 3.0, -9.0),
        ("2^3^2", 0.0, 512.0),
        ("t^-1", 4.0, 0.25),
        ("coth(1)", 0.0, 1.0 / 1f64.tanh()),
        ("exp(0) + sqrt(t)", 9.0, 4.0),
        ("8/4/2", 0.0, 1.0),
        ("1 - 2 - 3", 0.0, -4.0),
    ];
    for (src, t, want) in cases {
        let got = parse_gamma(src).unwrap().eval(t).unwrap();
        assert!((got - want).abs() < 1e-12, "{src}: {got} vs {want}");
    }
}

#[test]
fn error_kinds_and_offsets() {
    assert!(matches!(
        parse_gamma("t ^"),
        Err(GammaError::Syntax { offset: 3, .. })
    ));
    assert!(matches!(
        parse_gamma("1 + log(t)"),
        Err(GammaError::UnknownFunction { offset: 4, .. })
    ));
    assert!(matches!(parse_gamma("t ^ t"), Err(GammaError::Syntax { .. })));
    assert!(matches!(parse_gamma(""), Err(GammaError::Syntax { .. })));
    assert!(matches!(parse_gamma("(t"), Err(GammaError::Syntax { .. })));
    let e = parse_gamma("1/t").unwrap();
    assert!(matches!(e.eval(0.0), Err(GammaError::Domain { .. })));
    let e = parse_gamma("sqrt(t - 1)").unwrap();
    assert!(matches!(e.eval(0.0), Err(GammaError::Domain { .. })));
}
