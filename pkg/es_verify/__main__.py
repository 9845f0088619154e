from es_verify.main import main

main()
