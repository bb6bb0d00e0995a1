from src.cli import main as cli_main, write_csv
from src.scenario import MethodComparison, comparison_configs
import logging
import os
import sys

def main():
    """Run the four-method comparison with default settings, or the CLI when arguments are given."""
    if len(sys.argv) > 1:
        return cli_main(sys.argv[1:])

    logging.basicConfig(level=logging.WARNING)
    print("🛰️  Free-Floating Target Alignment")
    print("=" * 50)

    comparison = MethodComparison()
    for config in comparison_configs():
        comparison.add_run(config)

    print("\nSimulating the four control methods...")
    comparison_df = comparison.compare_methods()

    print("\n" + "="*60)
    print("METHOD COMPARISON SUMMARY")
    print("="*60)
    print(comparison_df[['name', 'method', 'f_z_ref', 'contact_break_count', 'alignment_time',
                         'steady_mean_fz']].to_string(index=False))

    print(f"\nKey Insights:")
    for name, metrics in comparison.metrics.items():
        if metrics.aligned:
            print(f"• {name} aligned at t = {metrics.alignment_time:.2f} s with {metrics.contact_break_count} contact breaks")
        else:
            print(f"• {name} did not align ({metrics.contact_break_count} contact breaks)")

    os.makedirs("output", exist_ok=True)
    print("\nSaving data...")
    for name, trace in comparison.traces.items():
        write_csv(trace, f"output/trace_{name}.csv")
    write_csv(comparison_df, "output/comparison.csv")

    print("\n✅ Analysis complete! Check the 'output' folder for results.")
    print("📊 Files generated:")
    print("  • trace_<method>.csv - per-tick trace of each run")
    print("  • comparison.csv - one metrics row per method")
    return 0

if __name__ == "__main__":
    sys.exit(main())
