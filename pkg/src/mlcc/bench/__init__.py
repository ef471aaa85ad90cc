"""Edge-list ingestion, instance generation, benchmark runs and the command line."""

from .harness import ALGORITHMS, BenchConfig, BenchRecord, format_table, parse_config, read_csv, run_bench, write_csv
from .network import MultilayerNetwork, generate_instance, ingest_edgelist, parse_edgelist, planted_network
