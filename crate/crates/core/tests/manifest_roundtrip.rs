use proptest::prelude::*;
use roiaug_core::model::{read_manifest, write_manifest};
use roiaug_core::{
    AnnotatedSample, BoundingBox, Label, LabelScheme, Lesion, Manifest, SchemeId, Split,
};

fn arb_label(scheme: SchemeId) -> BoxedStrategy<Label> {
    match scheme {
        SchemeId::Birads5 => (1u8..=5).prop_map(Label::Birads).boxed(),
        SchemeId::Tri => {
            prop::sample::select(vec![Label::Normal, Label::Benign, Label::Malignant]).boxed()
        }
    }
}

fn arb_lesion() -> impl Strategy<Value = Lesion> {
    (0u32..5000, 0u32..5000, 0u32..500, 0u32..500, "[a-z_]{1,16}")
        .prop_map(|(x, y, w, h, kind)| Lesion::new(BoundingBox::new(x, y, x + w, y + h), kind))
}

fn arb_manifest() -> impl Strategy<Value = Manifest> {
    prop::sample::select(vec![SchemeId::Birads5, SchemeId::Tri]).prop_flat_map(|scheme| {
        let sample = (
            "[A-Za-z0-9_\\-. ,]{1,12}",
            "[a-z0-9/_\\-]{1,20}\\.png",
            arb_label(scheme),
            prop::sample::select(Split::ALL.to_vec()),
            prop::collection::vec(arb_lesion(), 0..4),
        )
            .prop_map(|(id, path, label, split, lesions)| AnnotatedSample {
                sample_id: id.trim().to_string(),
                image_path: path,
                label,
                lesions,
                split,
            })
            .prop_filter("non-empty id", |s| !s.sample_id.is_empty());
        prop::collection::vec(sample, 1..20).prop_map(move |mut samples| {
            let mut seen = std::collections::HashSet::new();
            samples.retain(|s| seen.insert(s.sample_id.clone()));
            Manifest::new(LabelScheme::new(scheme), samples)
        })
    })
}

proptest! {
    #[test]
    fn parse_inverts_serialize(m in arb_manifest()) {
        let mut buf = Vec::new();
        write_manifest(&mut buf, &m).unwrap();
        let back = read_manifest(buf.as_slice()).unwrap();
        prop_assert_eq!(&back, &m);
        let mut again = Vec::new();
        write_manifest(&mut again, &back).unwrap();
        prop_assert_eq!(again, buf);
    }
}

#[test]
fn mias_style_histogram() {
    let mut text = String::from("sample_id,image_path,label,split,lesions\n");
    for (token, n) in [("normal", 209), ("benign", 61), ("malignant", 52)] {
        for i in 0..n {
            text.push_str(&format!(
                "{token}{i:03},mias/{token}{i:03}.png,{token},unassigned,\n"
            ));
        }
    }
    let m = read_manifest(text.as_bytes()).unwrap();
    assert_eq!(m.len(), 322);
    assert_eq!(
        m.class_histogram(),
        vec![
            (Label::Normal, 209),
            (Label::Benign, 61),
            (Label::Malignant, 52)
        ]
    );
}
