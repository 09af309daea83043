#![allow(dead_code)]

//! Helpers shared by the integration tests.

/// Value of attribute `name` in an SVG element string.
pub fn attr<'a>(element: &'a str, name: &str) -> Option<&'a str> {
    let key = format!(" {name}=\"");
    let start = element.find(&key)? + key.len();
    let len = element[start..].find('"')?;
    Some(&element[start..start + len])
}

/// `(feature index, x, width)` of every bar and the x position of the zero
/// line.
pub fn parse_bars(svg: &str) -> (Vec<(usize, f64, f64)>, f64) {
    let mut bars = Vec::new();
    let mut zero = None;
    for chunk in svg.split('<').skip(1) {
        let element = chunk.split('>').next().unwrap_or("");
        if element.starts_with("rect") {
            let idx = attr(element, "data-index").unwrap().parse().unwrap();
            let x = attr(element, "x").unwrap().parse().unwrap();
            let w = attr(element, "width").unwrap().parse().unwrap();
            bars.push((idx, x, w));
        } else if element.starts_with("line") && attr(element, "class") == Some("zero-line") {
            zero = Some(attr(element, "x1").unwrap().parse().unwrap());
        }
    }
    (bars, zero.expect("zero line present"))
}

/// Features whose bar extends to the right of the zero line.
pub fn right_of_zero(svg: &str) -> Vec<usize> {
    let (bars, zero) = parse_bars(svg);
    let mut right: Vec<usize> = bars.into_iter().filter(|&(_, x, w)| w > 0.0 && x >= zero).map(|b| b.0).collect();
    right.sort_unstable();
    right
}
