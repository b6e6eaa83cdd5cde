"""Command-line driver orchestrating the pipeline end to end.

Subcommands read their inputs from the config file and from the outputs of
earlier stages inside the output directory:

    out/dtm.csv, out/vocabulary_report.json        ingest
    out/segmentation.csv                           segment
    out/runs/seed_<seed>/                          fit
    out/consensus/                                 consensus
    out/probe/                                     probe
    out/hubs/                                      hubs
    out/report/                                    report
    out/synth/                                     synth
    out/score/recovery.json                        score

Logs go to standard error; data only to files.  Exit codes: 0 success,
2 input error, 3 empty result, 4 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import align as align_mod
from . import corpus as corpus_mod
from . import hubs as hubs_mod
from . import report as report_mod
from . import splsda as splsda_mod
from . import synth as synth_mod
from .config import PipelineConfig, load_pipeline_config, load_topic_labels
from .errors import InputDataError, VersetopicsError
from .lda import fit_ensemble, load_run, save_run

log = logging.getLogger("versetopics")


def _output_dir(config: PipelineConfig, args) -> Path:
    return Path(args.output) if args.output else config.paths.output


def _load_tokens(config: PipelineConfig):
    if config.paths.tokens is None:
        raise InputDataError("config has no [paths] tokens entry")
    tokens = corpus_mod.load_tokens(config.paths.tokens)
    if config.verb_reassign_enabled:
        tokens = corpus_mod.apply_verb_reassignment(tokens, config.policy)
    return tokens


def _segmentation_and_layout(config: PipelineConfig, tokens):
    layout = corpus_mod.content_layout(tokens)
    counts = corpus_mod.stanza_counts(layout)
    segmentation = corpus_mod.segment_blocks(counts, config.target_block_size)
    return segmentation, layout


def _resolve_dtm(config: PipelineConfig, output: Path):
    if config.paths.dtm is not None:
        return corpus_mod.load_long_format(config.paths.dtm)
    ingested = output / "dtm.csv"
    if ingested.exists():
        return corpus_mod.load_long_format(ingested)
    raise InputDataError(
        "no DTM available: set [paths] dtm or run the ingest command first"
    )


def cmd_ingest(config: PipelineConfig, args) -> int:
    output = _output_dir(config, args)
    output.mkdir(parents=True, exist_ok=True)
    tokens = _load_tokens(config)
    segmentation, _layout = _segmentation_and_layout(config, tokens)
    dtm = corpus_mod.build_dtm(tokens, segmentation, config.policy)
    corpus_mod.save_long_format(dtm, output / "dtm.csv")
    stats = corpus_mod.vocabulary_report(tokens, config.policy)
    stats["sparsity"] = dtm.sparsity
    stats["blocks"] = len(dtm.block_ids)
    with open(output / "vocabulary_report.json", "w", encoding="utf-8") as fh:
        json.dump(stats, fh, indent=2, sort_keys=True)
        fh.write("\n")
    log.info(
        "ingested %d blocks x %d lemmas (sparsity %.3f)",
        len(dtm.block_ids),
        len(dtm.lemmas),
        dtm.sparsity,
    )
    return 0


def cmd_segment(config: PipelineConfig, args) -> int:
    output = _output_dir(config, args)
    output.mkdir(parents=True, exist_ok=True)
    tokens = _load_tokens(config)
    segmentation, layout = _segmentation_and_layout(config, tokens)
    with open(output / "segmentation.csv", "w", encoding="utf-8", newline="") as fh:
        fh.write("block_id,chapter,first_stanza,last_stanza,stanza_count\n")
        for block in segmentation.blocks:
            stanzas = layout[block.chapter]
            lo, hi = block.stanza_range
            fh.write(
                f"{block.block_id},{block.chapter},{stanzas[lo - 1]},{stanzas[hi - 1]},"
                f"{block.stanza_count}\n"
            )
    log.info("segmented %d chapters into %d blocks", len(layout), len(segmentation.blocks))
    return 0


def cmd_fit(config: PipelineConfig, args) -> int:
    output = _output_dir(config, args)
    dtm = _resolve_dtm(config, output)
    base_seed = args.seed if args.seed is not None else config.base_seed
    runs_dir = output / "runs"
    runs_dir.mkdir(parents=True, exist_ok=True)

    def progress(run):
        log.info("chain seed=%d log_likelihood=%.2f", run.seed, run.log_likelihood)

    runs = fit_ensemble(
        dtm, config.gibbs, config.n_runs, base_seed, jobs=args.jobs, progress=progress
    )
    for run in runs:
        save_run(run, runs_dir / f"seed_{run.seed}", dtm.lemmas)
    log.info("fitted %d chains into %s", len(runs), runs_dir)
    return 0


def _load_runs(output: Path):
    runs_dir = output / "runs"
    if not runs_dir.is_dir():
        raise InputDataError(f"no runs directory in {output}; run the fit command first")
    seeds = []
    for child in runs_dir.iterdir():
        if child.is_dir() and child.name.startswith("seed_"):
            seeds.append(int(child.name.removeprefix("seed_")))
    if not seeds:
        raise InputDataError(f"no chain outputs in {runs_dir}")
    return [load_run(runs_dir / f"seed_{seed}") for seed in sorted(seeds)]


def cmd_consensus(config: PipelineConfig, args) -> int:
    output = _output_dir(config, args)
    dtm = _resolve_dtm(config, output)
    runs = _load_runs(output)
    result = align_mod.consensus(
        runs,
        weights=config.weights,
        thresholds=config.thresholds,
        m=config.top_m,
        lemmas=dtm.lemmas,
    )
    consensus_dir = output / "consensus"
    consensus_dir.mkdir(parents=True, exist_ok=True)
    align_mod.write_alignment_report(runs, result.alignments, consensus_dir / "diagnostics.csv")
    align_mod.write_consensus(
        result, dtm.block_ids, consensus_dir, reference_seed=runs[result.reference_index].seed
    )
    log.info(
        "consensus over %d/%d retained runs, N_eff=%.3f (reference seed %d)",
        result.retained_run_count,
        len(runs),
        result.n_eff,
        runs[result.reference_index].seed,
    )
    return 0


def cmd_probe(config: PipelineConfig, args) -> int:
    output = _output_dir(config, args)
    dtm = _resolve_dtm(config, output)
    block_ids, dominant = align_mod.load_dominant(output / "consensus" / "dominant.csv")
    if list(block_ids) != list(dtm.block_ids):
        raise InputDataError("consensus blocks do not match the DTM; rerun consensus")
    probe_dir = output / "probe"
    probe_dir.mkdir(parents=True, exist_ok=True)
    report = splsda_mod.run_ovr_probe(dtm, dominant, config.splsda, dtm.lemmas)
    splsda_mod.write_probe_report(report, probe_dir / "probe_report.csv")
    dictionary = splsda_mod.consolidate_lexicon(dtm, dominant, config.splsda)
    lda_terms = align_mod.load_top_terms(output / "consensus" / "top_terms.csv")
    overlap = splsda_mod.cross_method_overlap(lda_terms, dictionary)
    splsda_mod.write_dictionary(dictionary, probe_dir / "dictionary.csv")
    splsda_mod.write_overlap(overlap, probe_dir / "overlap.csv")
    log.info(
        "probe: overall acc=%.3f bacc=%.3f (baselines %.3f/%.3f)",
        report.overall_acc,
        report.overall_bacc,
        report.overall_acc0,
        report.overall_bacc0,
    )
    return 0


def _reference_beta(output: Path):
    summary_path = output / "consensus" / "summary.json"
    if not summary_path.exists():
        raise InputDataError("no consensus summary; run the consensus command first")
    with open(summary_path, encoding="utf-8") as fh:
        summary = json.load(fh)
    seed = summary.get("reference_seed")
    if seed is None:
        raise InputDataError("consensus summary lacks reference_seed")
    run = load_run(output / "runs" / f"seed_{seed}")
    return run


def cmd_hubs(config: PipelineConfig, args) -> int:
    output = _output_dir(config, args)
    if config.paths.hubs is None or config.paths.taxonomy is None:
        raise InputDataError("config needs [paths] hubs and taxonomy entries")
    tokens = _load_tokens(config)
    segmentation, layout = _segmentation_and_layout(config, tokens)
    hubs = hubs_mod.load_hubs(config.paths.hubs)
    taxonomy = hubs_mod.load_taxonomy(config.paths.taxonomy)
    block_ids, gamma = align_mod.load_consensus_gamma(
        output / "consensus" / "consensus_gamma.csv"
    )
    if list(block_ids) != list(segmentation.block_ids):
        raise InputDataError("consensus blocks do not match the segmentation")
    reference = _reference_beta(output)
    dtm = _resolve_dtm(config, output)
    lda_terms = align_mod.load_top_terms(output / "consensus" / "top_terms.csv")
    dict_path = output / "probe" / "dictionary.csv"
    dictionary = splsda_mod.load_dictionary(dict_path) if dict_path.exists() else None
    labels = (
        load_topic_labels(config.paths.topic_labels, gamma.shape[1])
        if config.paths.topic_labels is not None
        else None
    )
    hubs_dir = output / "hubs"
    hubs_dir.mkdir(parents=True, exist_ok=True)
    profiles = []
    for hub in hubs:
        profile = hubs_mod.hub_gamma(hub, gamma, segmentation, layout)
        counts = hubs_mod.hub_lemma_counts(tokens, hub, config.policy)
        profile = hubs_mod.hub_beta_profile(
            profile, reference.beta_matrix, dtm.lemmas, lda_terms, counts
        )
        card = hubs_mod.build_hub_card(
            profile, lda_terms, taxonomy, counts, dictionary, labels
        )
        hubs_mod.write_hub_card(card, hubs_dir)
        profiles.append(profile)
        log.info("hub %s: dominant topic %d", hub.id, profile.dominant + 1)
    hubs_mod.write_hub_gamma_table(profiles, hubs_dir / "hub_gamma.csv")
    return 0


def cmd_report(config: PipelineConfig, args) -> int:
    output = _output_dir(config, args)
    dtm = _resolve_dtm(config, output)
    block_ids, gamma = align_mod.load_consensus_gamma(
        output / "consensus" / "consensus_gamma.csv"
    )
    reference = _reference_beta(output)
    lda_terms = align_mod.load_top_terms(output / "consensus" / "top_terms.csv")

    hubs = taxonomy = segmentation = layout = None
    if config.paths.hubs is not None and config.paths.tokens is not None:
        tokens = _load_tokens(config)
        segmentation, layout = _segmentation_and_layout(config, tokens)
        hubs = hubs_mod.load_hubs(config.paths.hubs)
    if config.paths.taxonomy is not None:
        taxonomy = hubs_mod.load_taxonomy(config.paths.taxonomy)
    dict_path = output / "probe" / "dictionary.csv"
    dictionary = splsda_mod.load_dictionary(dict_path) if dict_path.exists() else None
    overlap_path = output / "probe" / "overlap.csv"
    overlap = None
    if overlap_path.exists():
        _, overlap = synth_mod.read_matrix_csv(overlap_path)
        overlap = overlap[:, 1:] if overlap.shape[1] == overlap.shape[0] + 1 else overlap
    labels = (
        load_topic_labels(config.paths.topic_labels, gamma.shape[1])
        if config.paths.topic_labels is not None
        else None
    )
    report_mod.write_figure_bundle(
        output / "report",
        dtm=dtm,
        consensus_gamma=gamma,
        reference_beta=reference.beta_matrix,
        lda_top_terms=lda_terms,
        taxonomy=taxonomy,
        dictionary=dictionary,
        overlap=overlap,
        hubs=hubs,
        segmentation=segmentation,
        layout=layout,
        topic_labels=labels,
    )
    log.info("figure bundle written to %s", output / "report")
    return 0


def cmd_synth(config: PipelineConfig, args) -> int:
    output = _output_dir(config, args)
    if config.synth is None:
        raise InputDataError("config has no [synth] section")
    spec = config.synth
    if args.seed is not None:
        from dataclasses import replace

        spec = replace(spec, seed=args.seed)
    corpus = synth_mod.generate(spec)
    synth_mod.write_synthetic(corpus, output / "synth")
    log.info(
        "synthetic corpus: %d docs x %d observed lemmas (sparsity %.3f)",
        corpus.dtm.shape[0],
        corpus.dtm.shape[1],
        corpus.dtm.sparsity,
    )
    return 0


def cmd_score(config: PipelineConfig, args) -> int:
    output = _output_dir(config, args)
    synth_dir = output / "synth"
    phi_lemmas, true_phi = synth_mod.read_matrix_csv(synth_dir / "true_phi.csv")
    _, true_theta = synth_mod.read_matrix_csv(synth_dir / "true_theta.csv")
    dtm = _resolve_dtm(config, output)
    reference = _reference_beta(output)
    _, gamma = align_mod.load_consensus_gamma(output / "consensus" / "consensus_gamma.csv")
    report = synth_mod.score_recovery(
        reference.beta_matrix,
        gamma,
        true_phi,
        true_theta,
        lemmas=dtm.lemmas,
        true_lemmas=phi_lemmas,
    )
    score_dir = output / "score"
    score_dir.mkdir(parents=True, exist_ok=True)
    payload = {
        "permutation": [int(x) for x in report.permutation],
        "matched_cosines": [float(x) for x in report.matched_cosines],
        "mean_cosine": report.mean_cosine,
        "mean_tv": report.mean_tv,
    }
    with open(score_dir / "recovery.json", "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
    log.info("recovery: mean cosine %.3f, mean TV %.3f", report.mean_cosine, report.mean_tv)
    return 0


COMMANDS = {
    "ingest": cmd_ingest,
    "segment": cmd_segment,
    "fit": cmd_fit,
    "consensus": cmd_consensus,
    "probe": cmd_probe,
    "hubs": cmd_hubs,
    "report": cmd_report,
    "synth": cmd_synth,
    "score": cmd_score,
}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="versetopics",
        description="Consensus topic modelling and lexical analytics for verse corpora",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn in COMMANDS.items():
        p = sub.add_parser(name, help=fn.__doc__)
        p.add_argument("--config", required=True, help="pipeline config file")
        p.add_argument("--jobs", type=int, default=1, help="parallel chains (fit only)")
        p.add_argument("--seed", type=int, default=None, help="override the configured seed")
        p.add_argument("--output", default=None, help="override the output directory")
    return parser


def main(argv=None) -> int:
    logging.basicConfig(stream=sys.stderr, level=logging.INFO, format="%(levelname)s %(message)s")
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        config = load_pipeline_config(args.config)
        return COMMANDS[args.command](config, args)
    except VersetopicsError as exc:
        log.error("%s", exc)
        return exc.exit_code
    except FileNotFoundError as exc:
        log.error("%s", exc)
        return 2


def run() -> None:
    sys.exit(main())


if __name__ == "__main__":
    run()
