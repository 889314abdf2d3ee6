from factorvol.cli import main

raise SystemExit(main())
