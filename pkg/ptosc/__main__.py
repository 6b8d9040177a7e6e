from ptosc.main import main

raise SystemExit(main())
