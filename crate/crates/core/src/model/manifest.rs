//! Manifest CSV reader and writer.
//!
//! ```text
//! sample_id,image_path,label,split,lesions
//! s1,img/s1.png,4,train,"10,20,30,40,discrete_mass;50,60,70,80,stellate_mass"
//! ```

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use csv::{QuoteStyle, ReaderBuilder, StringRecord, Terminator, WriterBuilder};

use super::{AnnotatedSample, BoundingBox, Label, LabelScheme, Lesion, Manifest, SchemeId, Split};
use crate::error::{Error, Result};

pub const MANIFEST_HEADER: [&str; 5] = ["sample_id", "image_path", "label", "split", "lesions"];

pub fn parse_manifest(path: impl AsRef<Path>) -> Result<Manifest> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_manifest(file).map_err(|e| match e {
        Error::Io { source, .. } => Error::io(path, source),
        other => other,
    })
}

pub fn read_manifest(reader: impl Read) -> Result<Manifest> {
    let mut rdr = ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(reader);
    let mut records = rdr.records();

    match records.next() {
        None => return Ok(Manifest::default()),
        Some(header) => {
            let header = header.map_err(|e| csv_error(e, 1))?;
            if header.iter().ne(MANIFEST_HEADER) {
                return Err(Error::MalformedRow {
                    line: 1,
                    reason: format!("expected header {:?}", MANIFEST_HEADER.join(",")),
                });
            }
        }
    }

    let mut scheme: Option<SchemeId> = None;
    let mut seen = HashSet::new();
    let mut samples = Vec::new();
    for record in records {
        let record = record.map_err(|e| csv_error(e, 0))?;
        let line = record.position().map_or(0, |p| p.line());
        let sample = parse_row(&record, line, &mut scheme)?;
        if !seen.insert(sample.sample_id.clone()) {
            return Err(Error::DuplicateId(sample.sample_id));
        }
        samples.push(sample);
    }
    Ok(Manifest {
        scheme: LabelScheme::new(scheme.unwrap_or(SchemeId::Birads5)),
        samples,
    })
}

fn csv_error(e: csv::Error, fallback_line: u64) -> Error {
    let line = e.position().map_or(fallback_line, |p| p.line());
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io("<manifest>", io),
        other => Error::MalformedRow {
            line,
            reason: format!("{other:?}"),
        },
    }
}

fn parse_row(
    record: &StringRecord,
    line: u64,
    scheme: &mut Option<SchemeId>,
) -> Result<AnnotatedSample> {
    let malformed = |reason: String| Error::MalformedRow { line, reason };
    if record.len() != MANIFEST_HEADER.len() {
        return Err(malformed(format!(
            "expected {} columns, found {}",
            MANIFEST_HEADER.len(),
            record.len()
        )));
    }
    let sample_id = record[0].trim();
    let image_path = record[1].trim();
    if sample_id.is_empty() || image_path.is_empty() {
        return Err(malformed("empty sample_id or image_path".into()));
    }

    let token = record[2].trim();
    let label = Label::parse_token(token).ok_or_else(|| Error::UnknownLabel {
        line,
        token: token.to_string(),
    })?;
    match scheme {
        None => *scheme = Some(label.scheme()),
        Some(id) if *id != label.scheme() => {
            return Err(Error::UnknownLabel {
                line,
                token: token.to_string(),
            })
        }
        Some(_) => {}
    }

    let split: Split = record[3].parse().map_err(malformed)?;
    let lesions = parse_lesions(&record[4]).map_err(malformed)?;

    Ok(AnnotatedSample {
        sample_id: sample_id.to_string(),
        image_path: image_path.to_string(),
        label,
        lesions,
        split,
    })
}

fn parse_lesions(field: &str) -> std::result::Result<Vec<Lesion>, String> {
    let field = field.trim();
    if field.is_empty() {
        return Ok(Vec::new());
    }
    field
        .split(';')
        .map(|entry| {
            let parts: Vec<&str> = entry.split(',').map(str::trim).collect();
            let [x0, y0, x1, y1, kind] = parts[..] else {
                return Err(format!("lesion entry {entry:?} needs 5 fields"));
            };
            let coord = |s: &str| {
                s.parse::<u32>()
                    .map_err(|_| format!("bad box coordinate {s:?} in {entry:?}"))
            };
            check_lesion_type(kind)?;
            Ok(Lesion {
                bbox: BoundingBox::new(coord(x0)?, coord(y0)?, coord(x1)?, coord(y1)?),
                lesion_type: kind.to_string(),
            })
        })
        .collect()
}

fn check_lesion_type(kind: &str) -> std::result::Result<(), String> {
    if kind.is_empty() || kind.contains([',', ';', '"', '\n', '\r']) {
        Err(format!("invalid lesion type {kind:?}"))
    } else {
        Ok(())
    }
}

pub fn serialize_manifest(m: &Manifest, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    write_manifest(&mut out, m).map_err(|e| match e {
        Error::Io { source, .. } => Error::io(path, source),
        other => other,
    })?;
    out.flush().map_err(|e| Error::io(path, e))
}

pub fn write_manifest(writer: impl Write, m: &Manifest) -> Result<()> {
    let mut wtr = WriterBuilder::new()
        .quote_style(QuoteStyle::Necessary)
        .terminator(Terminator::Any(b'\n'))
        .from_writer(writer);
    let io = |e: csv::Error| match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io("<manifest>", io),
        other => Error::InvalidField {
            field: "row",
            reason: format!("{other:?}"),
        },
    };
    wtr.write_record(MANIFEST_HEADER).map_err(io)?;
    for s in &m.samples {
        let lesions = s
            .lesions
            .iter()
            .map(|l| {
                check_lesion_type(&l.lesion_type).map_err(|reason| Error::InvalidField {
                    field: "lesion_type",
                    reason,
                })?;
                let b = l.bbox;
                Ok(format!(
                    "{},{},{},{},{}",
                    b.x_min, b.y_min, b.x_max, b.y_max, l.lesion_type
                ))
            })
            .collect::<Result<Vec<_>>>()?
            .join(";");
        wtr.write_record([
            s.sample_id.as_str(),
            s.image_path.as_str(),
            &s.label.token(),
            s.split.as_str(),
            &lesions,
        ])
        .map_err(io)?;
    }
    wtr.flush().map_err(|e| Error::io("<manifest>", e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<Manifest> {
        read_manifest(text.as_bytes())
    }

    fn to_string(m: &Manifest) -> String {
        let mut buf = Vec::new();
        write_manifest(&mut buf, m).unwrap();
        String::from_utf8(buf).unwrap()
    }

    const HEADER: &str = "sample_id,image_path,label,split,lesions\n";

    #[test]
    fn header_only_is_empty() {
        let m = parse(HEADER).unwrap();
        assert!(m.is_empty());
        assert_eq!(to_string(&m), HEADER);
    }

    #[test]
    fn single_box_row() {
        let m = parse(&format!(
            "{HEADER}s1,img/s1.png,4,train,\"10,20,30,40,discrete_mass\"\n"
        ))
        .unwrap();
        let expected = AnnotatedSample {
            sample_id: "s1".into(),
            image_path: "img/s1.png".into(),
            label: Label::Birads(4),
            lesions: vec![Lesion::new(
                BoundingBox::new(10, 20, 30, 40),
                "discrete_mass",
            )],
            split: Split::Train,
        };
        assert_eq!(m.samples, vec![expected]);
        assert_eq!(m.scheme.id(), SchemeId::Birads5);
    }

    #[test]
    fn three_boxes_round_trip() {
        let s = AnnotatedSample::new("a", "a.png", Label::Birads(5))
            .with_lesion(BoundingBox::new(0, 0, 1, 1), "discrete_mass")
            .with_lesion(BoundingBox::new(2, 3, 4, 5), "spiculated_mass")
            .with_lesion(BoundingBox::new(6, 7, 8, 9), "stellate_mass");
        let m = Manifest::new(LabelScheme::default(), vec![s]);
        let text = to_string(&m);
        assert!(text
            .contains("\"0,0,1,1,discrete_mass;2,3,4,5,spiculated_mass;6,7,8,9,stellate_mass\""));
        let back = parse(&text).unwrap();
        assert_eq!(back.samples[0].lesions.len(), 3);
        assert_eq!(back, m);
        assert_eq!(to_string(&back), text);
    }

    #[test]
    fn tri_scheme_detected() {
        let m = parse(&format!(
            "{HEADER}a,a.png,normal,unassigned,\nb,b.png,malignant,test,\n"
        ))
        .unwrap();
        assert_eq!(m.scheme.id(), SchemeId::Tri);
        assert_eq!(m.samples[1].split, Split::Test);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let e = parse(&format!("{HEADER}a,a.png,1,train,\nb,b.png,2,train\n")).unwrap_err();
        assert!(matches!(e, Error::MalformedRow { line: 3, .. }), "{e:?}");

        let e = parse(&format!("{HEADER}a,a.png,1,train,\"1,2,x,4,mass\"\n")).unwrap_err();
        assert!(matches!(e, Error::MalformedRow { line: 2, .. }), "{e:?}");

        let e = parse(&format!("{HEADER}a,a.png,7,train,\n")).unwrap_err();
        assert!(matches!(e, Error::UnknownLabel { line: 2, .. }), "{e:?}");

        let e = parse(&format!(
            "{HEADER}a,a.png,1,train,\nb,b.png,benign,train,\n"
        ))
        .unwrap_err();
        assert!(matches!(e, Error::UnknownLabel { line: 3, .. }), "{e:?}");

        let e = parse(&format!("{HEADER}a,a.png,1,train,\na,b.png,2,train,\n")).unwrap_err();
        assert!(
            matches!(e, Error::DuplicateId(ref id) if id == "a"),
            "{e:?}"
        );

        let e = parse(&format!("{HEADER}a,a.png,1,later,\n")).unwrap_err();
        assert!(matches!(e, Error::MalformedRow { line: 2, .. }), "{e:?}");

        let e = parse("id,path,label,split,lesions\n").unwrap_err();
        assert!(matches!(e, Error::MalformedRow { line: 1, .. }), "{e:?}");
    }

    #[test]
    fn inverted_boxes_parse_for_later_validation() {
        let m = parse(&format!("{HEADER}a,a.png,3,train,\"9,0,1,1,mass\"\n")).unwrap();
        assert!(m.samples[0].lesions[0].bbox.is_inverted());
    }

    #[test]
    fn serializer_rejects_unencodable_lesion_type() {
        let s = AnnotatedSample::new("a", "a.png", Label::Birads(3))
            .with_lesion(BoundingBox::new(0, 0, 1, 1), "mass;calc");
        let m = Manifest::new(LabelScheme::default(), vec![s]);
        assert!(write_manifest(Vec::new(), &m).is_err());
    }

    #[test]
    fn file_round_trip_is_a_fixpoint() {
        let dir = tempfile::tempdir().unwrap();
        let p1 = dir.path().join("m1.csv");
        let p2 = dir.path().join("m2.csv");
        let s = AnnotatedSample::new("s1", "img/s1.png", Label::Birads(4))
            .with_lesion(BoundingBox::new(10, 20, 30, 40), "discrete_mass")
            .with_split(Split::Val);
        serialize_manifest(&Manifest::new(LabelScheme::default(), vec![s]), &p1).unwrap();
        serialize_manifest(&parse_manifest(&p1).unwrap(), &p2).unwrap();
        assert_eq!(std::fs::read(&p1).unwrap(), std::fs::read(&p2).unwrap());
    }
}
