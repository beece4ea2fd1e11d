use std::path::{Component, Path, PathBuf};

fn normalized(p: &Path) -> PathBuf {
    let abs = std::path::absolute(p).unwrap_or_else(|_| p.to_path_buf());
    let mut out = PathBuf::new();
    for c in abs.components() {
        match c {
            Component::ParentDir => {
                out.pop();
            }
            Component::CurDir => {}
            other => out.push(other),
        }
    }
    out
}

/// Lexical path of `target` relative to directory `base`, `/`-separated.
pub fn relative_path(target: &Path, base: &Path) -> String {
    let target = normalized(target);
    let base = normalized(base);
    let t: Vec<_> = target.components().collect();
    let b: Vec<_> = base.components().collect();
    let common = t.iter().zip(&b).take_while(|(x, y)| x == y).count();
    let mut parts: Vec<String> = vec!["..".into(); b.len() - common];
    parts.extend(
        t[common..]
            .iter()
            .map(|c| c.as_os_str().to_string_lossy().into_owned()),
    );
    if parts.is_empty() {
        ".".into()
    } else {
        parts.join("/")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn relative_paths() {
        assert_eq!(
            relative_path(Path::new("/a/b/c.png"), Path::new("/a")),
            "b/c.png"
        );
        assert_eq!(
            relative_path(Path::new("/a/x/c.png"), Path::new("/a/b")),
            "../x/c.png"
        );
        assert_eq!(
            relative_path(Path::new("/a/./b/../c"), Path::new("/a")),
            "c"
        );
        assert_eq!(relative_path(Path::new("/a"), Path::new("/a")), ".");
    }
}
