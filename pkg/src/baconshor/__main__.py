from baconshor.cli import main

main()
