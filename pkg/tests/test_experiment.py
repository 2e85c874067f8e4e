import pytest

from sms_controller.corpus import (LabeledSms, dump_corpus, generate_seed_spam, generate_stream,
                                   parse_corpus)
from sms_controller.engine import build_seed_ontology
from sms_controller.experiment import (BatchStats, format_trend_table, run_spam_experiment,
                                       split_batches)
from sms_controller.preprocess import SmsMessage, fixture_text


def test_split_batches_preserves_order():
    parts = split_batches(list(range(11)), 3)
    assert parts == [[0, 1, 2, 3], [4, 5, 6, 7], [8, 9, 10]]


@pytest.mark.parametrize("items,n", [([1, 2], 1), ([], 2), ([1], 2)])
def test_split_batches_rejects(items, n):
    with pytest.raises(ValueError):
        split_batches(items, n)


def test_undefined_rates_are_none():
    stats = BatchStats(1, spam=0, ham=0, true_positives=0, false_positives=0)
    assert stats.detection_pct is None and stats.false_positive_pct is None
    assert format_trend_table([stats]).splitlines()[1] == "1\tn/a\tn/a"


def test_bundled_corpora_are_reproducible():
    assert fixture_text("spam-seed-100.tsv").split("\n", 1)[1] == dump_corpus(
        generate_seed_spam(100, 7))
    assert fixture_text("stream-500.tsv").split("\n", 1)[1] == dump_corpus(
        generate_stream(500, seed=11))


def test_corpus_roundtrip_and_errors():
    items = generate_stream(20, seed=1)
    back = parse_corpus(dump_corpus(items))
    assert [(x.is_spam, x.message.body) for x in back] == [(x.is_spam, x.message.body)
                                                          for x in items]
    with pytest.raises(ValueError, match="line 1"):
        parse_corpus("maybe\t+1\thi\n")


def test_experiment_leaves_seed_untouched(pipeline, seed_corpus, stream_corpus):
    onto = build_seed_ontology([x.message for x in seed_corpus], pipeline)
    before = onto.dumps()
    rows = run_spam_experiment(stream_corpus[:100], onto, 4, True, pipeline)
    assert onto.dumps() == before
    assert [r.batch for r in rows] == [1, 2, 3, 4]
    assert sum(r.spam + r.ham for r in rows) == 100


def test_enhancement_off_freezes_detection(pipeline):
    corpus = [LabeledSms(SmsMessage("+1", "free ringtone"), True)] * 4
    onto = build_seed_ontology([SmsMessage("+1", "free")], pipeline)
    rows = run_spam_experiment(corpus + [LabeledSms(SmsMessage("+1", "ringtone"), True)] * 2,
                               onto, 2, False, pipeline, enhancement=False)
    assert [r.true_positives for r in rows] == [3, 1]
    rows = run_spam_experiment(corpus + [LabeledSms(SmsMessage("+1", "ringtone"), True)] * 2,
                               onto, 2, False, pipeline)
    assert [r.true_positives for r in rows] == [3, 3]
