"""Write a CSV of the weight-two orthogonal Green function on the disk chart."""
import sys

from weilcheck import cli

out = sys.argv[1] if len(sys.argv) > 1 else "green_b2.csv"
sys.exit(cli.main(["grid", "--what", "green", "--lam", "2", "--x", "1.2,0.3,-0.1",
                   "--n", "61", "--out", out]))
