use deunicode::deunicode_char;

/// Fold Lean's Unicode notation into plain ASCII.
///
/// Mathematical symbols get word or operator spellings (`∀` → `for all`,
/// `≤` → `<=`, `ℕ` → `N`); anything left over goes through a generic
/// transliteration table. Pure ASCII input is returned unchanged.
pub fn ascii_fold(text: &str) -> String {
    if text.is_ascii() {
        return text.to_string();
    }
    let mut out = String::with_capacity(text.len());
    for c in text.chars() {
        if c.is_ascii() {
            out.push(c);
            continue;
        }
        if let Some(s) = symbol(c) {
            out.push_str(s);
        } else if let Some(d) = subscript_digit(c) {
            out.push(d);
        } else {
            match deunicode_char(c) {
                Some(s) if !s.is_empty() && s.is_ascii() => out.push_str(s),
                _ => out.push('?'),
            }
        }
    }
    out
}

fn symbol(c: char) -> Option<&'static str> {
    Some(match c {
        '∀' => "for all",
        '∃' => "there exists",
        '→' => "to",
        '←' => "<-",
        '↔' => "iff",
        '¬' => "not",
        '∧' => "and",
        '∨' => "or",
        '≤' => "<=",
        '≥' => ">=",
        '≠' => "!=",
        '∈' => "in",
        '∉' => "not in",
        '⊆' => "subset",
        '⊂' => "ssubset",
        '∩' => "inter",
        '∪' => "union",
        '∅' => "empty",
        '∑' => "sum",
        '∏' => "prod",
        '⊢' => "|-",
        '⟨' => "<",
        '⟩' => ">",
        '·' => ".",
        '•' => "*",
        '∘' => "o",
        '⁻' => "^-",
        'ℕ' => "N",
        'ℤ' => "Z",
        'ℚ' => "Q",
        'ℝ' => "R",
        'ℂ' => "C",
        'ᶜ' => "^c",
        'ᵥ' => "_v",
        'λ' => "fun",
        '≃' => "equiv",
        '≅' => "iso",
        '∣' => "|",
        '∞' => "infinity",
        _ => return None,
    })
}

fn subscript_digit(c: char) -> Option<char> {
    match c {
        '₀'..='₉' => char::from_digit(c as u32 - '₀' as u32, 10),
        '⁰' => Some('0'),
        '¹' => Some('1'),
        '²' => Some('2'),
        '³' => Some('3'),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn folds_lean_notation() {
        assert_eq!(
            ascii_fold("∀ n : ℕ, ∃ m, n ≤ m"),
            "for all n : N, there exists m, n <= m"
        );
        assert_eq!(ascii_fold("g₁ -ᵥ g₂"), "g1 -_v g2");
        assert_eq!(ascii_fold("f : E → F"), "f : E to F");
    }

    #[test]
    fn ascii_passthrough() {
        assert_eq!(ascii_fold("theorem foo : x = x := rfl"), "theorem foo : x = x := rfl");
    }

    #[test]
    fn output_is_always_ascii() {
        assert!(ascii_fold("数学 🎉 α β").is_ascii());
    }
}
