import nckg.cli

if __name__ == "__main__":
    nckg.cli.main()
