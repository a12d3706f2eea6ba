from pqwallet.cli import run

run()
