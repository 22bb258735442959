use std::fmt::Write as _;

use super::LoopTrace;

/// `step,train_loss,eval_loss` rows; eval_loss is blank on non-eval steps.
pub fn trace_csv(trace: &LoopTrace) -> String {
    let mut out = String::from("step,train_loss,eval_loss\n");
    let _ = writeln!(out, "0,,{}", trace.initial_eval_loss);
    for s in &trace.steps {
        let eval = s.eval_loss.map(|e| e.to_string()).unwrap_or_default();
        let _ = writeln!(out, "{},{},{}", s.step, s.train_loss, eval);
    }
    out
}

/// Standalone SVG line chart of train loss (blue) and eval loss (orange).
pub fn trace_svg(trace: &LoopTrace) -> String {
    const W: f64 = 640.0;
    const H: f64 = 360.0;
    const PAD: f64 = 48.0;

    let max_step = trace.steps.last().map_or(1, |s| s.step).max(1) as f64;
    let max_loss = trace
        .steps
        .iter()
        .flat_map(|s| [Some(s.train_loss), s.eval_loss])
        .flatten()
        .chain([trace.initial_eval_loss])
        .filter(|x| x.is_finite())
        .fold(0.0f64, f64::max)
        .max(1e-9);
    let x = |step: f64| PAD + step / max_step * (W - 2.0 * PAD);
    let y = |loss: f64| H - PAD - loss / max_loss * (H - 2.0 * PAD);
    let polyline = |points: Vec<(f64, f64)>, colour: &str| {
        let pts: Vec<String> = points.iter().map(|(a, b)| format!("{:.2},{:.2}", x(*a), y(*b))).collect();
        format!(
            "<polyline fill=\"none\" stroke=\"{colour}\" stroke-width=\"1.5\" points=\"{}\"/>\n",
            pts.join(" ")
        )
    };

    let train: Vec<(f64, f64)> = trace.steps.iter().map(|s| (s.step as f64, s.train_loss)).collect();
    let eval: Vec<(f64, f64)> = std::iter::once((0.0, trace.initial_eval_loss))
        .chain(trace.steps.iter().filter_map(|s| s.eval_loss.map(|e| (s.step as f64, e))))
        .collect();

    let mut out = String::new();
    let _ = writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" viewBox=\"0 0 {W} {H}\">"
    );
    out.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    let _ = writeln!(
        out,
        "<line x1=\"{PAD}\" y1=\"{0}\" x2=\"{1}\" y2=\"{0}\" stroke=\"black\"/>",
        H - PAD,
        W - PAD
    );
    let _ = writeln!(out, "<line x1=\"{PAD}\" y1=\"{PAD}\" x2=\"{PAD}\" y2=\"{}\" stroke=\"black\"/>", H - PAD);
    let _ = writeln!(
        out,
        "<text x=\"{}\" y=\"{}\" font-size=\"12\" text-anchor=\"middle\">step (max {})</text>",
        W / 2.0,
        H - 12.0,
        max_step
    );
    let _ = writeln!(
        out,
        "<text x=\"12\" y=\"{}\" font-size=\"12\" transform=\"rotate(-90 12 {0})\">loss (max {:.3})</text>",
        H / 2.0,
        max_loss
    );
    out.push_str(&polyline(train, "#1f77b4"));
    out.push_str(&polyline(eval, "#ff7f0e"));
    out.push_str("</svg>\n");
    out
}
