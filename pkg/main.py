from cli import cli


def main():
    """Run the qdwh-tool command group."""
    cli(prog_name="qdwh-tool")


if __name__ == "__main__":
    main()
