#![no_main]

use fpt::cli::parse_expression;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(src) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(expr) = parse_expression(src) {
        let _ = expr.eval(0.5);
        // printing must re-parse to the same tree
        let printed = expr.tree.to_string();
        let again = parse_expression(&printed).expect("printed expression parses");
        assert_eq!(again.tree, expr.tree, "{printed}");
    }
});
